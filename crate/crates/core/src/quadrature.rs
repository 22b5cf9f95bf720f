//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals,
//! plus a window finder for integrands on the real line given in log form.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-15, max_segments: 50_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let pair = f(c - h * x) + f(c + h * x);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment { a, b, value: kronrod * h, error: ((kronrod - gauss) * h).abs() }
}

/// Integrates `f` over `[points[0], points[last]]`, using the interior points
/// as initial subdivision (kinks and discontinuities should be listed).
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    if points.len() < 2 || points.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("quadrature breakpoints must be sorted".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1]));
        }
    }
    loop {
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() {
            return Err(Error::Numerical("non-finite quadrature sum".into()));
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult { value, abs_error: error, segments: heap.len() });
        }
        if heap.len() >= opts.max_segments {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: estimate {value:e}, error {error:e}"
            )));
        }
        let worst = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution: accept its estimate.
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
    }
}

/// Finite window `[lo, hi]` outside which `exp(log_f)` stays below
/// `exp(peak - drop)`, together with the observed peak of `log_f`.
///
/// `anchors` must contain every location where the integrand may peak;
/// `scale` is the characteristic width of its features.
pub fn log_window<F: Fn(f64) -> f64>(log_f: &F, anchors: &[f64], scale: f64, drop: f64) -> Result<(f64, f64, f64)> {
    let finite: Vec<f64> = anchors.iter().copied().filter(|a| a.is_finite()).collect();
    if finite.is_empty() || !(scale > 0.0) {
        return Err(Error::InvalidParameter("quadrature window needs anchors and a positive scale".into()));
    }
    let amin = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let amax = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = amin - 12.0 * scale;
    let mut hi = amax + 12.0 * scale;
    let n = (((hi - lo) / scale) * 4.0).clamp(64.0, 8000.0) as usize;
    let mut peak = finite.iter().map(|&a| log_f(a)).fold(f64::NEG_INFINITY, f64::max);
    for i in 0..=n {
        peak = peak.max(log_f(lo + (hi - lo) * i as f64 / n as f64));
    }
    if !peak.is_finite() {
        return Err(Error::Numerical(format!("integrand peak is {peak}")));
    }
    let mut step = 4.0 * scale;
    let mut guard = 0;
    while log_f(lo) > peak - drop {
        peak = peak.max(log_f(lo));
        lo -= step;
        step *= 1.5;
        guard += 1;
        if guard > 200 {
            return Err(Error::Numerical("integrand does not decay on the left".into()));
        }
    }
    step = 4.0 * scale;
    guard = 0;
    while log_f(hi) > peak - drop {
        peak = peak.max(log_f(hi));
        hi += step;
        step *= 1.5;
        guard += 1;
        if guard > 200 {
            return Err(Error::Numerical("integrand does not decay on the right".into()));
        }
    }
    Ok((lo, hi, peak))
}

/// Sorted breakpoints for `[lo, hi]`: a uniform partition with at most
/// `max_panels` panels of width about `scale`, merged with `extra` points.
pub fn panel_points(lo: f64, hi: f64, scale: f64, extra: &[f64], max_panels: usize) -> Vec<f64> {
    let n = ((hi - lo) / scale).ceil().clamp(1.0, max_panels as f64) as usize;
    let mut pts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    pts.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `ln ∫ exp(log_f)` over the real line.
pub fn integrate_log_line<F: Fn(f64) -> f64>(
    log_f: F,
    anchors: &[f64],
    scale: f64,
    kinks: &[f64],
    opts: QuadOptions,
) -> Result<f64> {
    let (lo, hi, peak) = log_window(&log_f, anchors, scale, 75.0)?;
    let pts = panel_points(lo, hi, scale, kinks, 4000);
    let res = integrate(|z| (log_f(z) - peak).exp(), &pts, QuadOptions { abs_tol: 0.0, ..opts })?;
    Ok(peak + res.value.ln())
}
