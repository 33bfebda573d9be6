//! Self-contained SVG figures: funnel plot, normal quantile plot of the
//! adjusted means, and caterpillar plot.
//!
//! Element classes are stable so that figures can be inspected structurally:
//! `marker` circles (one per data point), `band` polylines, `mean-line`,
//! `reference-line`, `interval` and `label`.

use std::fmt::Write;

use thiserror::Error;

use crate::funnel::{confidence_bands, Classification, FunnelReport};
use crate::scalar::Scalar;
use crate::RANKING_CAVEAT;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("report has nothing to plot")]
    EmptyReport,
    #[error("invalid plot style: {0}")]
    InvalidStyle(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
    pub left: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub margins: Margins,
    pub point_radius: f64,
    pub within_color: String,
    pub above_color: String,
    pub below_color: String,
    pub inner_band_color: String,
    pub outer_band_color: String,
    pub mean_color: String,
    pub font_family: String,
    pub font_size: f64,
    /// Print institution ids next to flagged institutions.
    pub show_labels: bool,
    pub show_outer_bands: bool,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 720.0,
            height: 480.0,
            margins: Margins {
                top: 30.0,
                right: 80.0,
                bottom: 70.0,
                left: 70.0,
            },
            point_radius: 4.0,
            within_color: "#4a4a4a".into(),
            above_color: "#1b7837".into(),
            below_color: "#b2182b".into(),
            inner_band_color: "#2166ac".into(),
            outer_band_color: "#92c5de".into(),
            mean_color: "#000000".into(),
            font_family: "sans-serif".into(),
            font_size: 11.0,
            show_labels: false,
            show_outer_bands: true,
        }
    }
}

impl PlotStyle {
    pub fn validate(&self) -> Result<(), RenderError> {
        let m = &self.margins;
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(RenderError::InvalidStyle(
                "width and height must be positive".into(),
            ));
        }
        if [m.top, m.right, m.bottom, m.left]
            .iter()
            .any(|&v| !(v >= 0.0))
        {
            return Err(RenderError::InvalidStyle(
                "margins must be non-negative".into(),
            ));
        }
        if !(self.width - m.left - m.right > 0.0 && self.height - m.top - m.bottom > 0.0) {
            return Err(RenderError::InvalidStyle(
                "margins leave no plotting area".into(),
            ));
        }
        if !(self.point_radius > 0.0 && self.font_size > 0.0) {
            return Err(RenderError::InvalidStyle(
                "point radius and font size must be positive".into(),
            ));
        }
        Ok(())
    }

    fn color(&self, class: Classification) -> &str {
        match class {
            Classification::Within => &self.within_color,
            Classification::AboveInner | Classification::AboveOuter => &self.above_color,
            Classification::BelowInner | Classification::BelowOuter => &self.below_color,
        }
    }
}

/// Affine map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScale {
    pub domain: (f64, f64),
    pub range: (f64, f64),
}

impl LinearScale {
    /// A zero-width domain is widened so the map stays invertible.
    pub fn new(domain: (f64, f64), range: (f64, f64)) -> Self {
        let (mut lo, mut hi) = domain;
        if !(hi > lo) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            lo -= pad;
            hi += pad;
        }
        Self {
            domain: (lo, hi),
            range,
        }
    }

    pub fn map(&self, value: f64) -> f64 {
        let (d0, d1) = self.domain;
        let (r0, r1) = self.range;
        r0 + (value - d0) / (d1 - d0) * (r1 - r0)
    }
}

/// Round tick values (1, 2 or 5 times a power of ten) covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * magnitude);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(value: f64, step: f64) -> String {
    let decimals = if step > 0.0 {
        (-step.log10().floor()).max(0.0) as usize
    } else {
        2
    };
    let text = format!("{value:.decimals$}");
    // "-0.0" and friends
    if text
        .trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        text.trim_start_matches('-').to_owned()
    } else {
        text
    }
}

fn escape(text: &str) -> String {
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

/// Minimal SVG writer with fixed two-decimal coordinates.
struct Canvas<'a> {
    out: String,
    style: &'a PlotStyle,
}

impl<'a> Canvas<'a> {
    fn new(style: &'a PlotStyle, title: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{font}" font-size="{size}">"#,
            w = style.width,
            h = style.height,
            font = escape(&style.font_family),
            size = style.font_size,
        );
        let _ = writeln!(out, "<title>{}</title>", escape(title));
        let _ = writeln!(
            out,
            r##"<rect class="background" x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
            style.width, style.height
        );
        Self { out, style }
    }

    fn plot_left(&self) -> f64 {
        self.style.margins.left
    }

    fn plot_right(&self) -> f64 {
        self.style.width - self.style.margins.right
    }

    fn plot_top(&self) -> f64 {
        self.style.margins.top
    }

    fn plot_bottom(&self) -> f64 {
        self.style.height - self.style.margins.bottom
    }

    fn x_scale(&self, domain: (f64, f64)) -> LinearScale {
        LinearScale::new(domain, (self.plot_left(), self.plot_right()))
    }

    fn y_scale(&self, domain: (f64, f64)) -> LinearScale {
        LinearScale::new(domain, (self.plot_bottom(), self.plot_top()))
    }

    fn line(
        &mut self,
        class: &str,
        (x1, y1): (f64, f64),
        (x2, y2): (f64, f64),
        stroke: &str,
        extra: &str,
    ) {
        let _ = writeln!(
            self.out,
            r#"<line class="{class}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{extra}/>"#
        );
    }

    fn polyline(&mut self, class: &str, points: &[(f64, f64)], stroke: &str, extra: &str) {
        let mut coords = String::new();
        for (i, (x, y)) in points.iter().enumerate() {
            if i > 0 {
                coords.push(' ');
            }
            let _ = write!(coords, "{x:.2},{y:.2}");
        }
        let _ = writeln!(
            self.out,
            r#"<polyline class="{class}" points="{coords}" fill="none" stroke="{stroke}"{extra}/>"#
        );
    }

    fn marker(&mut self, class: &str, (x, y): (f64, f64), fill: &str, tooltip: &str) {
        let _ = writeln!(
            self.out,
            r#"<circle class="marker {class}" cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"><title>{tip}</title></circle>"#,
            r = self.style.point_radius,
            tip = escape(tooltip),
        );
    }

    fn text(&mut self, class: &str, (x, y): (f64, f64), anchor: &str, content: &str, extra: &str) {
        let _ = writeln!(
            self.out,
            r#"<text class="{class}" x="{x:.2}" y="{y:.2}" text-anchor="{anchor}"{extra}>{}</text>"#,
            escape(content)
        );
    }

    fn frame(&mut self) {
        let _ = writeln!(
            self.out,
            r##"<rect class="frame" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#808080"/>"##,
            self.plot_left(),
            self.plot_top(),
            self.plot_right() - self.plot_left(),
            self.plot_bottom() - self.plot_top()
        );
    }

    fn x_axis(&mut self, scale: &LinearScale, title: &str) {
        let ticks = nice_ticks(scale.domain.0, scale.domain.1, 8);
        let step = ticks.get(1).map_or(1.0, |t| t - ticks[0]);
        let bottom = self.plot_bottom();
        self.out.push_str("<g class=\"axis x\">\n");
        for t in &ticks {
            let x = scale.map(*t);
            self.line("tick", (x, bottom), (x, bottom + 5.0), "#808080", "");
            self.text(
                "tick-label",
                (x, bottom + 18.0),
                "middle",
                &tick_label(*t, step),
                "",
            );
        }
        let centre = (self.plot_left() + self.plot_right()) / 2.0;
        self.text("axis-title", (centre, bottom + 38.0), "middle", title, "");
        self.out.push_str("</g>\n");
    }

    fn y_axis(&mut self, scale: &LinearScale, title: &str) {
        let ticks = nice_ticks(scale.domain.0, scale.domain.1, 6);
        let step = ticks.get(1).map_or(1.0, |t| t - ticks[0]);
        let left = self.plot_left();
        self.out.push_str("<g class=\"axis y\">\n");
        for t in &ticks {
            let y = scale.map(*t);
            self.line("tick", (left - 5.0, y), (left, y), "#808080", "");
            self.text(
                "tick-label",
                (left - 8.0, y + 4.0),
                "end",
                &tick_label(*t, step),
                "",
            );
        }
        let middle = (self.plot_top() + self.plot_bottom()) / 2.0;
        let x = left - 52.0;
        let rotate = format!(r#" transform="rotate(-90 {x:.2} {middle:.2})""#);
        self.text("axis-title", (x, middle), "middle", title, &rotate);
        self.out.push_str("</g>\n");
    }

    fn caveat(&mut self, note: &str) {
        let y = self.style.height - 8.0;
        let size = format!(
            r##" font-size="{}" fill="#606060""##,
            self.style.font_size * 0.8
        );
        self.text("caveat", (self.plot_left(), y), "start", note, &size);
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Sizes at which band curves are drawn: every integer from a little below the
/// smallest institution to 10% past the largest.
pub fn band_grid(sizes: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let sizes: Vec<usize> = sizes.into_iter().collect();
    let (Some(&min), Some(&max)) = (sizes.iter().min(), sizes.iter().max()) else {
        return Vec::new();
    };
    let start = min.saturating_sub(2).max(1);
    let end = ((max as f64) * 1.1).ceil() as usize;
    (start..=end.max(start + 1)).collect()
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Level name, stroke colour and `(n, lower, upper)` samples.
type BandCurve<'a> = (&'a str, &'a str, Vec<(usize, f64, f64)>);

/// Funnel plot: institution means against size with inner and outer bands.
pub fn render_funnel_svg<S: Scalar>(
    report: &FunnelReport<S>,
    style: &PlotStyle,
) -> Result<String, RenderError> {
    style.validate()?;
    if report.summaries.is_empty() {
        return Err(RenderError::EmptyReport);
    }
    let fit = &report.fit;
    let grand_mean = fit.grand_mean.as_f64();
    let grid = band_grid(report.summaries.iter().map(|s| s.size));
    let mut levels = vec![("inner", report.inner_z(), style.inner_band_color.as_str())];
    if style.show_outer_bands {
        levels.push(("outer", report.outer_z(), style.outer_band_color.as_str()));
    }

    let curves: Vec<BandCurve> = levels
        .iter()
        .map(|&(name, z, color)| {
            let points = grid
                .iter()
                .map(|&n| {
                    let b = confidence_bands(fit, n, z);
                    (n, b.lower.as_f64(), b.upper.as_f64())
                })
                .collect();
            (name, color, points)
        })
        .collect();

    let mut y_lo = grand_mean;
    let mut y_hi = grand_mean;
    for s in &report.summaries {
        y_lo = y_lo.min(s.mean_transformed.as_f64());
        y_hi = y_hi.max(s.mean_transformed.as_f64());
    }
    for (_, _, points) in &curves {
        for &(_, lo, hi) in points {
            y_lo = y_lo.min(lo);
            y_hi = y_hi.max(hi);
        }
    }
    let x_domain = (
        *grid.first().expect("non-empty grid") as f64,
        *grid.last().expect("non-empty grid") as f64,
    );

    let mut canvas = Canvas::new(style, "Funnel plot of institution means");
    let xs = canvas.x_scale(x_domain);
    let ys = canvas.y_scale(padded(y_lo, y_hi));
    canvas.frame();
    canvas.x_axis(&xs, "Institution size (researchers)");
    canvas.y_axis(&ys, "Mean of ln(index + delta)");
    back_transformed_axis(&mut canvas, &ys, report.transform.delta.as_f64());

    let mean_y = ys.map(grand_mean);
    let mean_color = style.mean_color.clone();
    canvas.line(
        "mean-line",
        (xs.map(x_domain.0), mean_y),
        (xs.map(x_domain.1), mean_y),
        &mean_color,
        "",
    );
    for (name, color, points) in &curves {
        let dash = if *name == "outer" {
            r#" stroke-dasharray="6,4""#
        } else {
            ""
        };
        let lower: Vec<(f64, f64)> = points
            .iter()
            .map(|&(n, lo, _)| (xs.map(n as f64), ys.map(lo)))
            .collect();
        let upper: Vec<(f64, f64)> = points
            .iter()
            .map(|&(n, _, hi)| (xs.map(n as f64), ys.map(hi)))
            .collect();
        canvas.polyline(&format!("band {name} upper"), &upper, color, dash);
        canvas.polyline(&format!("band {name} lower"), &lower, color, dash);
    }

    for s in &report.summaries {
        let at = (xs.map(s.size as f64), ys.map(s.mean_transformed.as_f64()));
        let tip = format!(
            "{} (n = {}, mean = {:.4}, {})",
            s.institution_id,
            s.size,
            s.mean_transformed.as_f64(),
            s.classification
        );
        canvas.marker(
            s.classification.as_str(),
            at,
            style.color(s.classification),
            &tip,
        );
        if style.show_labels && s.classification.is_outlier() {
            canvas.text(
                "label",
                (at.0 + style.point_radius + 2.0, at.1 - style.point_radius),
                "start",
                &s.institution_id,
                "",
            );
        }
    }
    canvas.caveat(RANKING_CAVEAT);
    Ok(canvas.finish())
}

/// Right-hand axis showing the original scale, `exp(y) - delta`.
fn back_transformed_axis(canvas: &mut Canvas<'_>, ys: &LinearScale, delta: f64) {
    let right = canvas.plot_right();
    let ticks = nice_ticks(ys.domain.0, ys.domain.1, 6);
    canvas.out.push_str("<g class=\"axis y2\">\n");
    for t in &ticks {
        let y = ys.map(*t);
        let original = t.exp() - delta;
        canvas.line("tick", (right, y), (right + 5.0, y), "#808080", "");
        canvas.text(
            "tick-label",
            (right + 8.0, y + 4.0),
            "start",
            &format!("{original:.3}"),
            "",
        );
    }
    let middle = (canvas.plot_top() + canvas.plot_bottom()) / 2.0;
    let x = right + 62.0;
    let rotate = format!(r#" transform="rotate(90 {x:.2} {middle:.2})""#);
    canvas.text(
        "axis-title",
        (x, middle),
        "middle",
        "Original scale (back-transformed)",
        &rotate,
    );
    canvas.out.push_str("</g>\n");
}

/// Normal quantile plot of the adjusted institution means.
pub fn render_qq_svg<S: Scalar>(
    report: &FunnelReport<S>,
    style: &PlotStyle,
) -> Result<String, RenderError> {
    style.validate()?;
    if report.qq_points.is_empty() {
        return Err(RenderError::EmptyReport);
    }
    let points: Vec<(f64, f64)> = report
        .qq_points
        .iter()
        .map(|p| (p.theoretical.as_f64(), p.sample.as_f64()))
        .collect();
    let lo = points
        .iter()
        .flat_map(|&(t, s)| [t, s])
        .fold(f64::INFINITY, f64::min);
    let hi = points
        .iter()
        .flat_map(|&(t, s)| [t, s])
        .fold(f64::NEG_INFINITY, f64::max);
    let domain = padded(lo, hi);

    let mut canvas = Canvas::new(style, "Normal quantile plot of adjusted means");
    let xs = canvas.x_scale(domain);
    let ys = canvas.y_scale(domain);
    canvas.frame();
    canvas.x_axis(&xs, "Expected under normality");
    canvas.y_axis(&ys, "Adjusted mean");
    let mean_color = style.mean_color.clone();
    canvas.line(
        "reference-line",
        (xs.map(domain.0), ys.map(domain.0)),
        (xs.map(domain.1), ys.map(domain.1)),
        &mean_color,
        r#" stroke-dasharray="4,3""#,
    );
    let fill = style.within_color.clone();
    for &(t, s) in &points {
        let tip = format!("expected {t:.4}, observed {s:.4}");
        canvas.marker("qq", (xs.map(t), ys.map(s)), &fill, &tip);
    }
    Ok(canvas.finish())
}

/// Caterpillar plot: institutions in ascending order of mean, each with the
/// interval `mean -/+ z * s / sqrt(n)`.
pub fn render_caterpillar_svg<S: Scalar>(
    report: &FunnelReport<S>,
    style: &PlotStyle,
    level_z: S,
) -> Result<String, RenderError> {
    style.validate()?;
    if report.summaries.is_empty() {
        return Err(RenderError::EmptyReport);
    }
    let mut order: Vec<&_> = report.summaries.iter().collect();
    order.sort_by(|a, b| {
        a.mean_transformed
            .partial_cmp(&b.mean_transformed)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.institution_id.cmp(&b.institution_id))
    });
    let intervals: Vec<(f64, f64, f64)> = order
        .iter()
        .map(|s| {
            let half = report.fit.half_width(s.size, level_z);
            let m = s.mean_transformed;
            (m.as_f64(), (m - half).as_f64(), (m + half).as_f64())
        })
        .collect();
    let grand_mean = report.fit.grand_mean.as_f64();
    let lo = intervals.iter().map(|i| i.1).fold(grand_mean, f64::min);
    let hi = intervals.iter().map(|i| i.2).fold(grand_mean, f64::max);
    let count = order.len() as f64;

    let mut canvas = Canvas::new(style, "Caterpillar plot of institution means");
    let xs = canvas.x_scale((0.5, count + 0.5));
    let ys = canvas.y_scale(padded(lo, hi));
    canvas.frame();
    canvas.y_axis(&ys, "Mean of ln(index + delta)");
    let bottom = canvas.plot_bottom();
    canvas.out.push_str("<g class=\"axis x\">\n");
    for (i, s) in order.iter().enumerate() {
        let x = xs.map(i as f64 + 1.0);
        let rotate = format!(r#" transform="rotate(-60 {x:.2} {:.2})""#, bottom + 12.0);
        canvas.text(
            "tick-label",
            (x, bottom + 12.0),
            "end",
            &s.institution_id,
            &rotate,
        );
    }
    canvas.out.push_str("</g>\n");

    let mean_y = ys.map(grand_mean);
    let mean_color = style.mean_color.clone();
    canvas.line(
        "mean-line",
        (xs.map(0.5), mean_y),
        (xs.map(count + 0.5), mean_y),
        &mean_color,
        "",
    );
    for (i, (s, &(m, lower, upper))) in order.iter().zip(&intervals).enumerate() {
        let x = xs.map(i as f64 + 1.0);
        let color = style.color(s.classification).to_owned();
        canvas.line(
            "interval",
            (x, ys.map(lower)),
            (x, ys.map(upper)),
            &color,
            "",
        );
        let tip = format!(
            "{} (n = {}, mean = {m:.4}, interval {lower:.4} to {upper:.4})",
            s.institution_id, s.size
        );
        canvas.marker(s.classification.as_str(), (x, ys.map(m)), &color, &tip);
    }
    canvas.caveat(RANKING_CAVEAT);
    Ok(canvas.finish())
}
