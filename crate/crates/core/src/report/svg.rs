use std::fmt::Write;

pub(crate) const WIDTH: f64 = 640.0;
pub(crate) const HEIGHT: f64 = 480.0;
pub(crate) const LEFT: f64 = 72.0;
pub(crate) const RIGHT: f64 = 150.0;
pub(crate) const TOP: f64 = 36.0;
pub(crate) const BOTTOM: f64 = 56.0;

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Maps data coordinates (already log10 where applicable) to the plot area.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Frame {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Frame {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x);
        let (y0, y1) = widen(y);
        Self { x0, x1, y0, y1 }
    }

    pub fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

pub(crate) fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i64)
    } else if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn linear_ticks(a: f64, b: f64) -> Vec<f64> {
    let span = b - a;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (a / step).ceil() as i64;
    let last = (b / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn log_ticks(a: f64, b: f64) -> Vec<f64> {
    let (first, last) = (a.ceil() as i64, b.floor() as i64);
    let stride = (((last - first) as f64 / 8.0).ceil() as i64).max(1);
    (first..=last).filter(|d| d.rem_euclid(stride) == 0).map(|d| d as f64).collect()
}

pub(crate) fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, log_x: bool, log_y: bool) {
    let (l, r, t, b) = (f.px(f.x0), f.px(f.x1), f.py(f.y1), f.py(f.y0));
    let _ = writeln!(out, r#"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, r - l, b - t);
    let xt = if log_x { log_ticks(f.x0, f.x1) } else { linear_ticks(f.x0, f.x1) };
    for x in xt {
        let p = f.px(x);
        let _ = writeln!(out, r#"<line x1="{p:.1}" y1="{b:.1}" x2="{p:.1}" y2="{:.1}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text x="{p:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, b + 18.0, tick_label(x, log_x));
    }
    let yt = if log_y { log_ticks(f.y0, f.y1) } else { linear_ticks(f.y0, f.y1) };
    for y in yt {
        let p = f.py(y);
        let _ = writeln!(out, r#"<line x1="{:.1}" y1="{p:.1}" x2="{l:.1}" y2="{p:.1}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 8.0, p + 4.0, tick_label(y, log_y));
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, HEIGHT - 14.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0:.1}" text-anchor="middle" transform="rotate(-90 16 {0:.1})">{1}</text>"#,
        (t + b) / 2.0,
        escape(y_label)
    );
}

/// Polyline through the points inside the frame; a gap breaks the line.
pub(crate) fn polyline(out: &mut String, f: &Frame, points: &[(f64, f64)], color: &str, dashed: bool) {
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let mut run: Vec<String> = Vec::new();
    let flush = |run: &mut Vec<String>, out: &mut String| {
        if run.len() >= 2 {
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, run.join(" "));
        }
        run.clear();
    };
    for &(x, y) in points {
        if x.is_finite() && y.is_finite() && f.contains(x, y) {
            run.push(format!("{:.1},{:.1}", f.px(x), f.py(y)));
        } else {
            flush(&mut run, out);
        }
    }
    flush(&mut run, out);
}

pub(crate) fn legend(out: &mut String, entries: &[(String, String)]) {
    let x = WIDTH - RIGHT + 12.0;
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = TOP + 12.0 + 16.0 * i as f64;
        let _ = writeln!(out, r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"/>"#, x + 18.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#, x + 22.0, y + 3.0, escape(name));
    }
}

/// Fixed qualitative palette for series and overlay lines.
pub(crate) fn palette(i: usize) -> &'static str {
    const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
    COLORS[i % COLORS.len()]
}

/// Sequential colormap on `[0, 1]`, dark blue to yellow.
pub(crate) fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let u = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
        assert_eq!(ramp(2.0), ramp(1.0));
    }

    #[test]
    fn ticks() {
        assert_eq!(log_ticks(-2.5, 1.2), vec![-2.0, -1.0, 0.0, 1.0]);
        assert_eq!(linear_ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(tick_label(-3.0, true), "1e-3");
        assert_eq!(tick_label(0.5, false), "0.5");
    }

    #[test]
    fn polyline_breaks_outside_frame() {
        let f = Frame::new((0.0, 1.0), (0.0, 1.0));
        let mut s = String::new();
        polyline(&mut s, &f, &[(0.0, 0.0), (0.5, 0.5), (0.6, 5.0), (0.7, 0.1), (0.8, 0.2)], "red", false);
        assert_eq!(s.matches("<polyline").count(), 2);
    }
}
