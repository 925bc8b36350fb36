//! Standalone SVG rendering of a weekly trend series.
//!
//! Emits plain SVG text with no plotting dependency: one translucent
//! polygon for the confidence band, one polyline for the weekly means,
//! axis lines, tick labels and a title. Coordinates are formatted with
//! fixed precision, so equal inputs give byte-identical files.

use chrono::Datelike;
use tresillo_core::pipeline::TrendPoint;

pub const MIN_DIMENSION: u32 = 100;

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub width_px: u32,
    pub height_px: u32,
    pub title: String,
    /// Whether to draw the translucent confidence band.
    pub band: bool,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            width_px: 1000,
            height_px: 400,
            title: String::new(),
            band: true,
        }
    }
}

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;

fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn day_number(point: &TrendPoint) -> f64 {
    f64::from(point.week.num_days_from_ce())
}

/// Renders the trend as a complete SVG document.
pub fn render_trend_svg(spec: &PlotSpec, points: &[TrendPoint]) -> Result<String, String> {
    if spec.width_px < MIN_DIMENSION || spec.height_px < MIN_DIMENSION {
        return Err(format!(
            "plot size must be at least {MIN_DIMENSION}x{MIN_DIMENSION} pixels"
        ));
    }
    if points.is_empty() {
        return Err("trend series is empty".into());
    }

    let width = f64::from(spec.width_px);
    let height = f64::from(spec.height_px);
    let plot_w = width - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = height - MARGIN_TOP - MARGIN_BOTTOM;

    let x_min = day_number(&points[0]);
    let x_max = day_number(points.last().expect("non-empty"));
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let to_x = |p: &TrendPoint| MARGIN_LEFT + (day_number(p) - x_min) / x_span * plot_w;

    let y_lo_raw = points
        .iter()
        .flat_map(|p| [p.ci_lower, p.mean])
        .fold(f64::INFINITY, f64::min);
    let y_hi_raw = points
        .iter()
        .flat_map(|p| [p.ci_upper, p.mean])
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = ((y_hi_raw - y_lo_raw) * 0.05).max(0.01);
    let y_lo = y_lo_raw - pad;
    let y_hi = y_hi_raw + pad;
    let to_y = |value: f64| MARGIN_TOP + (y_hi - value) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = spec.width_px,
        h = spec.height_px
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
        w = spec.width_px,
        h = spec.height_px
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        width / 2.0,
        escape_xml(&spec.title)
    ));

    if spec.band {
        // confidence band: upper bounds left to right, lower bounds back
        let mut band = String::new();
        for p in points {
            band.push_str(&format!("{:.2},{:.2} ", to_x(p), to_y(p.ci_upper)));
        }
        for p in points.iter().rev() {
            band.push_str(&format!("{:.2},{:.2} ", to_x(p), to_y(p.ci_lower)));
        }
        svg.push_str(&format!(
            "  <polygon points=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n",
            band.trim_end()
        ));
    }

    let mean_line: Vec<String> = points
        .iter()
        .map(|p| format!("{:.2},{:.2}", to_x(p), to_y(p.mean)))
        .collect();
    svg.push_str(&format!(
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\"/>\n",
        mean_line.join(" ")
    ));

    // axes
    let x_axis_y = MARGIN_TOP + plot_h;
    svg.push_str(&format!(
        "  <line x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{r:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        b = x_axis_y
    ));
    svg.push_str(&format!(
        "  <line x1=\"{l:.2}\" y1=\"{t:.2}\" x2=\"{l:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = x_axis_y
    ));

    // y ticks
    for step in 0..=4 {
        let value = y_lo + (y_hi - y_lo) * f64::from(step) / 4.0;
        let y = to_y(value);
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            MARGIN_LEFT - 4.0,
            MARGIN_LEFT
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{value:.3}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
    }

    // x ticks on up to five evenly spaced series indices
    let tick_count = points.len().min(5);
    let mut tick_indices: Vec<usize> = if tick_count <= 1 {
        vec![0]
    } else {
        (0..tick_count)
            .map(|i| i * (points.len() - 1) / (tick_count - 1))
            .collect()
    };
    tick_indices.dedup();
    for index in tick_indices {
        let p = &points[index];
        let x = to_x(p);
        svg.push_str(&format!(
            "  <line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            x_axis_y,
            x_axis_y + 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            x_axis_y + 18.0,
            p.week
        ));
    }

    // axis labels
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">week</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        height - 8.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">similarity</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn point(week: &str, mean: f64, lo: f64, hi: f64) -> TrendPoint {
        TrendPoint {
            week: NaiveDate::parse_from_str(week, "%Y-%m-%d").unwrap(),
            n_songs: 1,
            mean,
            ci_lower: lo,
            ci_upper: hi,
        }
    }

    #[test]
    fn two_point_trend_has_one_polyline_with_two_points() {
        let points = vec![
            point("2017-01-14", 0.5, 0.4, 0.6),
            point("2017-01-21", 0.7, 0.6, 0.8),
        ];
        let svg = render_trend_svg(&PlotSpec::default(), &points).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let polyline = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        let coords = polyline.split("points=\"").nth(1).unwrap();
        let coords = coords.split('"').next().unwrap();
        assert_eq!(coords.split(' ').count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }

    #[test]
    fn zero_width_band_collapses_onto_the_line() {
        let points = vec![
            point("2017-01-14", 0.5, 0.5, 0.5),
            point("2017-01-21", 0.5, 0.5, 0.5),
        ];
        let svg = render_trend_svg(&PlotSpec::default(), &points).unwrap();
        let band_line = svg.lines().find(|l| l.contains("<polygon")).unwrap();
        let coords: Vec<&str> = band_line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap()
            .split(' ')
            .collect();
        // four corners, two distinct positions
        assert_eq!(coords.len(), 4);
        assert_eq!(coords[0], coords[3]);
        assert_eq!(coords[1], coords[2]);
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(render_trend_svg(&PlotSpec::default(), &[]).is_err());
    }

    #[test]
    fn tiny_dimensions_are_rejected() {
        let spec = PlotSpec {
            width_px: 50,
            ..Default::default()
        };
        let points = vec![point("2017-01-14", 0.5, 0.4, 0.6)];
        assert!(render_trend_svg(&spec, &points).is_err());
    }

    #[test]
    fn title_is_escaped() {
        let spec = PlotSpec {
            title: "a < b & \"c\"".into(),
            ..Default::default()
        };
        let points = vec![
            point("2017-01-14", 0.5, 0.4, 0.6),
            point("2017-01-21", 0.6, 0.5, 0.7),
        ];
        let svg = render_trend_svg(&spec, &points).unwrap();
        assert!(svg.contains("a &lt; b &amp; &quot;c&quot;"));
        assert!(!svg.contains("a < b"));
    }

    #[test]
    fn single_point_renders() {
        let points = vec![point("2017-01-14", 0.5, 0.4, 0.6)];
        let svg = render_trend_svg(&PlotSpec::default(), &points).unwrap();
        assert!(svg.contains("<polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn band_can_be_turned_off() {
        let spec = PlotSpec {
            band: false,
            ..Default::default()
        };
        let points = vec![
            point("2017-01-14", 0.5, 0.4, 0.6),
            point("2017-01-21", 0.6, 0.5, 0.7),
        ];
        let svg = render_trend_svg(&spec, &points).unwrap();
        assert!(!svg.contains("<polygon"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    /// Minimal XML well-formedness check: tags balance, attributes are
    /// quoted, text holds no raw `<` and only entity-escaped `&`.
    fn assert_well_formed_xml(text: &str) {
        let mut rest = text.trim_start();
        if rest.starts_with("<?xml") {
            let end = rest.find("?>").expect("declaration closed");
            rest = &rest[end + 2..];
        }
        let mut stack: Vec<String> = Vec::new();
        let mut chars = rest.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c == '&' {
                let tail = &rest[i..];
                assert!(
                    ["&amp;", "&lt;", "&gt;", "&quot;", "&apos;"]
                        .iter()
                        .any(|e| tail.starts_with(e)),
                    "raw ampersand at byte {i}"
                );
            }
            if c != '<' {
                continue;
            }
            let tail = &rest[i..];
            let close = tail.find('>').expect("tag closed");
            let tag = &tail[1..close];
            assert_eq!(
                tag.matches('"').count() % 2,
                0,
                "unbalanced quotes in <{tag}>"
            );
            if let Some(name) = tag.strip_prefix('/') {
                assert_eq!(stack.pop().as_deref(), Some(name), "mismatched </{name}>");
            } else if !tag.ends_with('/') {
                let name = tag.split_whitespace().next().unwrap().to_string();
                stack.push(name);
            }
            while let Some(&(j, _)) = chars.peek() {
                if j > i + close {
                    break;
                }
                chars.next();
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    #[test]
    fn output_is_well_formed_xml() {
        let spec = PlotSpec {
            title: "similarity & <trend>".into(),
            ..Default::default()
        };
        let points = vec![
            point("2017-01-14", 0.5, 0.4, 0.6),
            point("2017-01-21", 0.6, 0.5, 0.7),
            point("2017-01-28", 0.4, 0.3, 0.5),
        ];
        let svg = render_trend_svg(&spec, &points).unwrap();
        assert_well_formed_xml(&svg);
    }
}
