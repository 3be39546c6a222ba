//! Deterministic PNG line plots: the image shown to the vision model.
//!
//! Rendering is a self-contained rasterizer (fixed bitmap font, fixed encoder
//! settings, no timestamps), so identical inputs produce byte-identical files
//! on every platform. Points are connected in ascending-x order with straight
//! segments and are never resampled or smoothed; aliasing from sparse grids
//! is preserved deliberately.

mod font;

use crate::numfit::Dataset;
use base64::Engine;

const BG: [u8; 3] = [255, 255, 255];
const GRID: [u8; 3] = [220, 220, 220];
const AXIS: [u8; 3] = [0, 0, 0];
const LINE: [u8; 3] = [0, 0, 0];
const OVERLAY: [u8; 3] = [150, 150, 150];
const FONT_SCALE: usize = 2;
const TICK_TARGET: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlotError {
    #[error("series contains non-finite values")]
    NonFiniteData,
    #[error("all x values identical; nothing to plot")]
    DegenerateRange,
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("plot dimensions below 64x64")]
    TooSmall,
    #[error("expected univariate data, got {0} input columns")]
    NotUnivariate(usize),
    #[error("png: {0}")]
    Encode(String),
    #[error("not a png payload")]
    InvalidPng,
}

/// Plot geometry. Colors and styling are fixed: black 2px line on white with
/// a light-gray grid, no title or legend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotSpec {
    pub width: usize,
    pub height: usize,
    pub margin_left: usize,
    pub margin_right: usize,
    pub margin_top: usize,
    pub margin_bottom: usize,
    pub line_width: usize,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            width: 800,
            height: 600,
            margin_left: 80,
            margin_right: 25,
            margin_top: 25,
            margin_bottom: 55,
            line_width: 2,
        }
    }
}

/// Renders a univariate dataset. Axis limits are the data extents padded 5%.
pub fn render_plot(data: &Dataset, spec: &PlotSpec) -> Result<Vec<u8>, PlotError> {
    if data.dim() != 1 {
        return Err(PlotError::NotUnivariate(data.dim()));
    }
    render_series(&[(&data.columns()[0], data.targets(), LINE)], spec)
}

/// Renders data plus a second overlay series (e.g. the best fit) in gray.
pub fn render_plot_overlay(
    data: &Dataset,
    overlay_ys: &[f64],
    spec: &PlotSpec,
) -> Result<Vec<u8>, PlotError> {
    if data.dim() != 1 {
        return Err(PlotError::NotUnivariate(data.dim()));
    }
    let xs = &data.columns()[0];
    render_series(&[(xs, overlay_ys, OVERLAY), (xs, data.targets(), LINE)], spec)
}

/// Low-level entry: one or more (xs, ys, color) series sharing axis limits.
/// The first series drives nothing special; limits come from all of them.
pub fn render_series(series: &[(&[f64], &[f64], [u8; 3])], spec: &PlotSpec) -> Result<Vec<u8>, PlotError> {
    if spec.width < 64 || spec.height < 64 {
        return Err(PlotError::TooSmall);
    }
    let mut sorted: Vec<Vec<(f64, f64)>> = Vec::new();
    for (xs, ys, _) in series {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(PlotError::TooFewPoints(xs.len().min(ys.len())));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(PlotError::NonFiniteData);
        }
        // total order on (x, y) so permuted input renders identically
        let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        sorted.push(pts);
    }

    let mut xlo = f64::INFINITY;
    let mut xhi = f64::NEG_INFINITY;
    let mut ylo = f64::INFINITY;
    let mut yhi = f64::NEG_INFINITY;
    for pts in &sorted {
        for &(x, y) in pts {
            xlo = xlo.min(x);
            xhi = xhi.max(x);
            ylo = ylo.min(y);
            yhi = yhi.max(y);
        }
    }
    if xhi == xlo {
        return Err(PlotError::DegenerateRange);
    }
    let xpad = (xhi - xlo) * 0.05;
    let ypad = if yhi == ylo { ylo.abs().max(1.0) * 0.05 } else { (yhi - ylo) * 0.05 };
    let (xlo, xhi) = (xlo - xpad, xhi + xpad);
    let (ylo, yhi) = (ylo - ypad, yhi + ypad);

    let w = spec.width;
    let h = spec.height;
    let mut buf = vec![0u8; w * h * 3];
    for px in buf.chunks_exact_mut(3) {
        px.copy_from_slice(&BG);
    }

    let left = spec.margin_left as f64;
    let right = (w - spec.margin_right) as f64;
    let top = spec.margin_top as f64;
    let bottom = (h - spec.margin_bottom) as f64;

    let to_px = |x: f64| left + (x - xlo) / (xhi - xlo) * (right - left);
    let to_py = |y: f64| bottom - (y - ylo) / (yhi - ylo) * (bottom - top);

    // grid + tick labels
    let xticks = nice_ticks(xlo, xhi, TICK_TARGET);
    let yticks = nice_ticks(ylo, yhi, TICK_TARGET);
    for &t in &xticks.values {
        let px = to_px(t).round() as i64;
        vline(&mut buf, w, h, px, top as i64, bottom as i64, GRID);
    }
    for &t in &yticks.values {
        let py = to_py(t).round() as i64;
        hline(&mut buf, w, h, py, left as i64, right as i64, GRID);
    }
    // frame
    hline(&mut buf, w, h, top as i64, left as i64, right as i64, AXIS);
    hline(&mut buf, w, h, bottom as i64, left as i64, right as i64, AXIS);
    vline(&mut buf, w, h, left as i64, top as i64, bottom as i64, AXIS);
    vline(&mut buf, w, h, right as i64, top as i64, bottom as i64, AXIS);
    for &t in &xticks.values {
        let px = to_px(t).round() as i64;
        vline(&mut buf, w, h, px, bottom as i64, bottom as i64 + 5, AXIS);
        let label = format_tick(t, xticks.step);
        let tw = font::text_width(&label, FONT_SCALE) as i64;
        font::draw_text(&mut buf, w, h, px - tw / 2, bottom as i64 + 9, &label, FONT_SCALE, AXIS);
    }
    for &t in &yticks.values {
        let py = to_py(t).round() as i64;
        hline(&mut buf, w, h, py, left as i64 - 5, left as i64, AXIS);
        let label = format_tick(t, yticks.step);
        let tw = font::text_width(&label, FONT_SCALE) as i64;
        let th = font::text_height(FONT_SCALE) as i64;
        font::draw_text(&mut buf, w, h, left as i64 - 9 - tw, py - th / 2, &label, FONT_SCALE, AXIS);
    }

    // data polylines, clipped to the plot area
    let clip = (left as i64, top as i64, right as i64, bottom as i64);
    for (pts, (_, _, color)) in sorted.iter().zip(series) {
        for pair in pts.windows(2) {
            let (x0, y0) = (to_px(pair[0].0), to_py(pair[0].1));
            let (x1, y1) = (to_px(pair[1].0), to_py(pair[1].1));
            draw_segment(&mut buf, w, h, x0, y0, x1, y1, spec.line_width, clip, *color);
        }
    }

    encode_png(&buf, w as u32, h as u32)
}

/// Base64 data URL for the chat-completions image content part.
pub fn to_image_payload(png: &[u8]) -> Result<String, PlotError> {
    const SIGNATURE: [u8; 8] = [0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
    if png.len() < 8 || png[..8] != SIGNATURE {
        return Err(PlotError::InvalidPng);
    }
    let b64 = base64::engine::general_purpose::STANDARD.encode(png);
    Ok(format!("data:image/png;base64,{b64}"))
}

struct Ticks {
    values: Vec<f64>,
    step: f64,
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Ticks {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let step = mag
        * if norm < 1.5 {
            1.0
        } else if norm < 3.0 {
            2.0
        } else if norm < 7.0 {
            5.0
        } else {
            10.0
        };
    let mut values = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + step * 1e-9 {
        // snap values that should be exactly zero
        values.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    Ticks { values, step }
}

fn format_tick(v: f64, step: f64) -> String {
    let a = v.abs();
    if a >= 1e6 || (v != 0.0 && a < 1e-4) {
        return format!("{v:.2e}");
    }
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor() as i32).clamp(0, 6) as usize
    };
    let s = format!("{v:.decimals$}");
    if s.starts_with("-0") && s.trim_start_matches(['-', '0', '.']).is_empty() {
        s[1..].to_string()
    } else {
        s
    }
}

fn put(buf: &mut [u8], w: usize, h: usize, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
        let idx = (y as usize * w + x as usize) * 3;
        buf[idx..idx + 3].copy_from_slice(&color);
    }
}

fn hline(buf: &mut [u8], w: usize, h: usize, y: i64, x0: i64, x1: i64, color: [u8; 3]) {
    for x in x0.min(x1)..=x0.max(x1) {
        put(buf, w, h, x, y, color);
    }
}

fn vline(buf: &mut [u8], w: usize, h: usize, x: i64, y0: i64, y1: i64, color: [u8; 3]) {
    for y in y0.min(y1)..=y0.max(y1) {
        put(buf, w, h, x, y, color);
    }
}

#[allow(clippy::too_many_arguments)]
fn draw_segment(
    buf: &mut [u8],
    w: usize,
    h: usize,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    thickness: usize,
    clip: (i64, i64, i64, i64),
    color: [u8; 3],
) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize + 1;
    let t = thickness.max(1) as i64;
    for i in 0..=steps {
        let f = i as f64 / steps as f64;
        let x = (x0 + (x1 - x0) * f).round() as i64;
        let y = (y0 + (y1 - y0) * f).round() as i64;
        for dy in 0..t {
            for dx in 0..t {
                let px = x + dx - t / 2;
                let py = y + dy - t / 2;
                if px >= clip.0 && px <= clip.2 && py >= clip.1 && py <= clip.3 {
                    put(buf, w, h, px, py, color);
                }
            }
        }
    }
}

fn encode_png(rgb: &[u8], w: u32, h: u32) -> Result<Vec<u8>, PlotError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Default);
        let mut writer = enc.write_header().map_err(|e| PlotError::Encode(e.to_string()))?;
        writer
            .write_image_data(rgb)
            .map_err(|e| PlotError::Encode(e.to_string()))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_dataset(n: usize) -> Dataset {
        let xs: Vec<f64> = (0..n).map(|i| 0.1 + 4.9 * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        Dataset::from_xy(xs, ys).unwrap()
    }

    fn png_dims(bytes: &[u8]) -> (u32, u32) {
        // IHDR is always the first chunk: width/height at offsets 16/20
        let w = u32::from_be_bytes(bytes[16..20].try_into().unwrap());
        let h = u32::from_be_bytes(bytes[20..24].try_into().unwrap());
        (w, h)
    }

    #[test]
    fn renders_valid_png_at_spec_size() {
        let png = render_plot(&sine_dataset(100), &PlotSpec::default()).unwrap();
        assert_eq!(&png[..8], &[0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A]);
        assert_eq!(png_dims(&png), (800, 600));
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render_plot(&sine_dataset(100), &PlotSpec::default()).unwrap();
        let b = render_plot(&sine_dataset(100), &PlotSpec::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_order_does_not_matter() {
        let d = sine_dataset(50);
        let mut xs = d.columns()[0].clone();
        let mut ys = d.targets().to_vec();
        xs.reverse();
        ys.reverse();
        let shuffled = Dataset::from_xy(xs, ys).unwrap();
        let a = render_plot(&d, &PlotSpec::default()).unwrap();
        let b = render_plot(&shuffled, &PlotSpec::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_series_rejected() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![0.0, f64::NAN, 2.0];
        assert_eq!(
            render_series(&[(&xs, &ys, [0, 0, 0])], &PlotSpec::default()),
            Err(PlotError::NonFiniteData)
        );
    }

    #[test]
    fn degenerate_x_range_rejected() {
        let xs = vec![1.0, 1.0, 1.0];
        let ys = vec![0.0, 1.0, 2.0];
        assert_eq!(
            render_series(&[(&xs, &ys, [0, 0, 0])], &PlotSpec::default()),
            Err(PlotError::DegenerateRange)
        );
    }

    #[test]
    fn too_few_points_rejected() {
        let xs = vec![1.0];
        let ys = vec![2.0];
        assert!(matches!(
            render_series(&[(&xs, &ys, [0, 0, 0])], &PlotSpec::default()),
            Err(PlotError::TooFewPoints(1))
        ));
    }

    #[test]
    fn constant_targets_render() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![3.0, 3.0, 3.0];
        assert!(render_series(&[(&xs, &ys, [0, 0, 0])], &PlotSpec::default()).is_ok());
    }

    #[test]
    fn payload_has_data_url_prefix() {
        let png = render_plot(&sine_dataset(20), &PlotSpec::default()).unwrap();
        let url = to_image_payload(&png).unwrap();
        assert!(url.starts_with("data:image/png;base64,"));
        let decoded = base64::engine::general_purpose::STANDARD
            .decode(&url["data:image/png;base64,".len()..])
            .unwrap();
        assert_eq!(decoded, png);
    }

    #[test]
    fn payload_rejects_empty_and_garbage() {
        assert_eq!(to_image_payload(&[]), Err(PlotError::InvalidPng));
        assert_eq!(to_image_payload(b"hello world"), Err(PlotError::InvalidPng));
    }

    #[test]
    fn overlay_renders() {
        let d = sine_dataset(50);
        let fit: Vec<f64> = d.columns()[0].iter().map(|x| x.cos()).collect();
        let png = render_plot_overlay(&d, &fit, &PlotSpec::default()).unwrap();
        assert_eq!(png_dims(&png), (800, 600));
    }
}
