//! Globally adaptive Gauss–Kronrod (10/21) quadrature.
//!
//! Semi-infinite ranges are mapped onto `[0, 1)` with `x = a + t / (1 - t)`;
//! the doubly infinite range is split at zero. Kronrod nodes never touch the
//! interval ends, so the singular endpoint of the map is never evaluated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerances must be positive and max_subdivisions >= 1 ({self:?})"
            )));
        }
        Ok(())
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

fn adapt<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let mut segments = vec![gk21(&mut f, a, b)];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tol {
            return Ok((value, error));
        }
        if segments.len() >= spec.max_subdivisions {
            return Err(Error::Convergence {
                estimate: value,
                error_bound: error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                if s.error > acc.1 {
                    (i, s.error)
                } else {
                    acc
                }
            });
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine precision; accept what we have
            let value: f64 = segments.iter().map(|s| s.value).sum::<f64>() + seg.value;
            let error: f64 = segments.iter().map(|s| s.error).sum::<f64>() + seg.error;
            if error <= 10.0 * tol {
                return Ok((value, error));
            }
            return Err(Error::Convergence {
                estimate: value,
                error_bound: error,
            });
        }
        segments.push(gk21(&mut f, seg.a, mid));
        segments.push(gk21(&mut f, mid, seg.b));
    }
}

/// Integrates `f` over `[lower, upper]`; either limit may be infinite.
pub fn integrate<F>(f: F, lower: f64, upper: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_error(f, lower, upper, spec).map(|(v, _)| v)
}

/// Like [`integrate`], also returning the error estimate.
pub fn integrate_with_error<F>(mut f: F, lower: f64, upper: f64, spec: &QuadratureSpec) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    spec.validate()?;
    if lower.is_nan() || upper.is_nan() {
        return Err(Error::InvalidParameter("NaN integration limit".into()));
    }
    integrate_dyn(&mut f, lower, upper, spec)
}

fn integrate_dyn(f: &mut dyn FnMut(f64) -> f64, lower: f64, upper: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    if lower == upper {
        return Ok((0.0, 0.0));
    }
    if lower > upper {
        return integrate_dyn(f, upper, lower, spec).map(|(v, e)| (-v, e));
    }
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => adapt(f, lower, upper, spec),
        (true, false) => adapt(
            |t| {
                let s = 1.0 - t;
                f(lower + t / s) / (s * s)
            },
            0.0,
            1.0,
            spec,
        ),
        (false, true) => adapt(
            |t| {
                let s = 1.0 - t;
                f(upper - t / s) / (s * s)
            },
            0.0,
            1.0,
            spec,
        ),
        (false, false) => {
            let (v1, e1) = integrate_dyn(f, f64::NEG_INFINITY, 0.0, spec)?;
            let (v2, e2) = integrate_dyn(f, 0.0, f64::INFINITY, spec)?;
            Ok((v1 + v2, e1 + e2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{gaussian_pdf, q_function};

    #[test]
    fn constant_on_unit_interval() {
        let v = integrate(|_| 1.0, 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_normalises_over_real_line() {
        let spec = QuadratureSpec::default();
        let v = integrate(|x| gaussian_pdf(x, 2.5).unwrap(), f64::NEG_INFINITY, f64::INFINITY, &spec).unwrap();
        assert!((v - 1.0).abs() <= spec.abs_tol.max(spec.rel_tol));
    }

    #[test]
    fn gaussian_truncated_at_ten_sigma() {
        let v = integrate(|x| gaussian_pdf(x, 1.0).unwrap(), -10.0, 10.0, &QuadratureSpec::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_tails_match_q() {
        let spec = QuadratureSpec::default();
        for &x in &[0.0, 0.5, 1.0, 2.0, 3.0] {
            let v = integrate(|t| gaussian_pdf(t, 1.0).unwrap(), x, f64::INFINITY, &spec).unwrap();
            assert!((v - q_function(x)).abs() <= 1e-8, "x = {x}");
        }
        let v = integrate(|t| gaussian_pdf(t, 1.0).unwrap(), 1.0, f64::INFINITY, &spec).unwrap();
        assert!((v - 0.158_655).abs() < 1e-6);
    }

    #[test]
    fn lower_infinite_limit() {
        let v = integrate(|t| gaussian_pdf(t, 1.0).unwrap(), f64::NEG_INFINITY, -2.0, &QuadratureSpec::default())
            .unwrap();
        assert!((v - q_function(2.0)).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let spec = QuadratureSpec::default();
        let v = integrate(|x| x * x, 2.0, 0.0, &spec).unwrap();
        assert!((v + 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let spec = QuadratureSpec::new(1e-15, 1e-15, 3).unwrap();
        let err = integrate(|x| (1.0 / x).sin(), 1e-4, 1.0, &spec).unwrap_err();
        match err {
            Error::Convergence { estimate, error_bound } => {
                assert!(estimate.is_finite());
                assert!(error_bound > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(QuadratureSpec::new(0.0, 1e-10, 10).is_err());
        assert!(QuadratureSpec::new(1e-10, 1e-10, 0).is_err());
    }

    #[test]
    fn deterministic() {
        let spec = QuadratureSpec::default();
        let f = |x: f64| (x * 3.0).cos() * (-x * x).exp();
        let a = integrate(f, -5.0, 7.0, &spec).unwrap();
        let b = integrate(f, -5.0, 7.0, &spec).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
