//! Siegel-type transforms: sums of a compactly supported function over a
//! lattice, with optional exclusion of isotropic or quasi-null vectors and
//! of vectors whose cross products with other lattice vectors are isotropic
//! or quasi-null, plus the K-average equidistribution experiment.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::count::isotropic_lines;
use crate::error::{Error, Result};
use crate::flows::{a_t, k_rot};
use crate::forms::QForm;
use crate::geom::{self, M3, V3};
use crate::heights::{quasi_null_from_logs, HeightParams};
use crate::lattice::{lattice_from_form, Lattice3, LatticeVector, Provenance};

/// A function R³ → R with declared support inside B(outer) \ B(inner).
pub struct SupportedFn<'a> {
    pub outer: f64,
    pub inner: f64,
    pub f: Box<dyn Fn(&V3) -> f64 + Sync + 'a>,
}

impl<'a> SupportedFn<'a> {
    pub fn new(outer: f64, inner: f64, f: impl Fn(&V3) -> f64 + Sync + 'a) -> Result<Self> {
        if !(outer > inner && inner >= 0.0 && outer.is_finite()) {
            return Err(Error::Precondition(
                "support bounds must satisfy 0 ≤ inner < outer < ∞".into(),
            ));
        }
        Ok(SupportedFn { outer, inner, f: Box::new(f) })
    }

    /// Indicator of the shell B(outer) \ B(inner), sup-norm.
    pub fn shell_indicator(outer: f64, inner: f64) -> Result<Self> {
        SupportedFn::new(outer, inner, move |v: &V3| {
            let n = geom::norm_sup(v);
            if n <= outer && n > inner {
                1.0
            } else {
                0.0
            }
        })
    }

    /// The wedge region {a < Q_0(v) < b, ½ ≤ ‖v‖ ≤ 1, v₁ > 0, ½v₁ ≤ |v₂| ≤ v₁}.
    pub fn wedge_region(a: f64, b: f64) -> Result<Self> {
        SupportedFn::new(1.0, 0.5 - 1e-12, move |v: &V3| {
            let n = geom::norm_sup(v);
            let q = geom::q0(v);
            if v[0] > 0.0
                && (0.5..=1.0).contains(&n)
                && q > a
                && q < b
                && v[1].abs() >= 0.5 * v[0]
                && v[1].abs() <= v[0]
            {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn eval(&self, v: &V3) -> f64 {
        (self.f)(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SiegelVariant {
    /// Plain sum over all nonzero lattice vectors of gΔ.
    Full,
    /// Exclude v with Q_0(v) = 0 or Q_0(v×w) = 0 for some w ∈ Δ.
    IsotropicExcluded,
    /// Exclude (η,M)-quasi-null v and v with quasi-null cross products.
    QuasiNullExcluded,
}

/// The exclusion filter of the Siegel variants, reusable across group
/// translates (membership depends only on the untranslated vector).
///
/// For isotropic exclusion on a lattice with a known irrational form the
/// cross condition is decided exactly through the censuses: v×Z³ fills the
/// orthogonal lattice of the primitive core of v, so some cross product is
/// isotropic iff the core is orthogonal to a dual-isotropic direction.
/// Otherwise, cross partners are enumerated up to `cross_radius`.
pub struct YFilter<'l> {
    lat: &'l Lattice3,
    variant: SiegelVariant,
    params: HeightParams,
    line_census: Option<Vec<[i64; 3]>>,
    dual_census: Option<Vec<[i64; 3]>>,
    partners: Vec<LatticeVector>,
    dual_form: Option<QForm>,
    cache: HashMap<[i64; 3], bool>,
}

impl<'l> YFilter<'l> {
    pub fn new(
        lat: &'l Lattice3,
        variant: SiegelVariant,
        params: &HeightParams,
        cross_radius: f64,
        census_radius: i64,
        max_box: u64,
    ) -> Result<Self> {
        let mut line_census = None;
        let mut dual_census = None;
        let mut partners = Vec::new();
        let mut dual_form = None;
        if variant != SiegelVariant::Full {
            if let Provenance::FromForm { form } = &lat.provenance {
                dual_form = form.dual().ok();
                if variant == SiegelVariant::IsotropicExcluded && !form.is_rational() {
                    let lines = isotropic_lines(form, census_radius)?;
                    let duals = isotropic_lines(&form.dual()?, census_radius)?;
                    line_census = Some(lines.reps);
                    dual_census = Some(duals.reps);
                }
            }
            if line_census.is_none() {
                partners = lat.enumerate_vectors(cross_radius, true, max_box)?;
            }
        }
        Ok(YFilter {
            lat,
            variant,
            params: *params,
            line_census,
            dual_census,
            partners,
            dual_form,
            cache: HashMap::new(),
        })
    }

    pub fn excluded(&mut self, m: &[i64; 3]) -> bool {
        if self.variant == SiegelVariant::Full {
            return false;
        }
        if let Some(&hit) = self.cache.get(m) {
            return hit;
        }
        let verdict = self.compute(m);
        self.cache.insert(*m, verdict);
        verdict
    }

    fn compute(&self, m: &[i64; 3]) -> bool {
        let v = geom::mat_vec(self.lat.basis(), &[m[0] as f64, m[1] as f64, m[2] as f64]);
        let log_q0 = match self.lat.q0_exact(m) {
            Some(s) => {
                if s.is_zero() {
                    return true;
                }
                s.log_abs()
            }
            None => {
                let q = geom::q0(&v);
                if q.abs() <= 1e-12 * geom::norm_sup(&v).powi(2) {
                    return true;
                }
                q.abs().ln()
            }
        };
        if self.variant == SiegelVariant::QuasiNullExcluded
            && quasi_null_from_logs(log_q0, geom::norm_sup(&v).ln(), &self.params)
        {
            return true;
        }
        if let (Some(_), Some(duals)) = (&self.line_census, &self.dual_census) {
            // Exact census route (isotropic variant only): the cross
            // condition reduces to orthogonality against a dual direction.
            let core = primitive_core(m);
            return duals.iter().any(|p| dot_i64(p, &core) == 0);
        }
        // Desk-scale partner cutoff.
        for w in &self.partners {
            let cr = geom::cross(&v, &w.v);
            if geom::norm_sup(&cr) < 1e-12 {
                continue;
            }
            let cross_m = [
                m[1] * w.m[2] - m[2] * w.m[1],
                m[2] * w.m[0] - m[0] * w.m[2],
                m[0] * w.m[1] - m[1] * w.m[0],
            ];
            let log_qc = match &self.dual_form {
                // Q_0(Bm × Bn) = ±Q*(m×n) for a unimodular basis B.
                Some(d) => {
                    let val = d.evaluate_int(&cross_m);
                    if val.is_zero() {
                        return true;
                    }
                    val.log_abs()
                }
                None => {
                    let q = geom::q0(&cr);
                    if q.abs() <= 1e-12 * geom::norm_sup(&cr).powi(2) {
                        return true;
                    }
                    q.abs().ln()
                }
            };
            if self.variant == SiegelVariant::QuasiNullExcluded
                && quasi_null_from_logs(log_qc, geom::norm_sup(&cr).ln(), &self.params)
            {
                return true;
            }
        }
        false
    }
}

fn primitive_core(m: &[i64; 3]) -> [i64; 3] {
    use num_integer::Integer;
    let g = (m[0].unsigned_abs().gcd(&m[1].unsigned_abs()).gcd(&m[2].unsigned_abs()) as i64).max(1);
    [m[0] / g, m[1] / g, m[2] / g]
}

fn dot_i64(a: &[i64; 3], b: &[i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Σ f(v) over v ∈ g·Y(Δ), where Y is selected by the variant.
pub fn siegel_transform(
    f: &SupportedFn,
    lat: &Lattice3,
    variant: SiegelVariant,
    g: &M3,
    p: &HeightParams,
    cross_radius: f64,
    max_box: u64,
) -> Result<f64> {
    let mut filter = YFilter::new(lat, variant, p, cross_radius, 60, max_box)?;
    siegel_transform_with(f, lat, &mut filter, g, max_box)
}

/// Same sum with a caller-managed filter (reused across many translates).
pub fn siegel_transform_with(
    f: &SupportedFn,
    lat: &Lattice3,
    filter: &mut YFilter,
    g: &M3,
    max_box: u64,
) -> Result<f64> {
    let moved = lat.translated(g);
    let cands = moved.enumerate_vectors(f.outer, false, max_box)?;
    let mut sum = 0.0;
    for c in &cands {
        if f.inner > 0.0 && geom::norm_sup(&c.v) < f.inner {
            continue;
        }
        if filter.excluded(&c.m) {
            continue;
        }
        // Representatives are one per ± pair; f need not be even.
        sum += f.eval(&c.v) + f.eval(&geom::neg(&c.v));
    }
    Ok(sum)
}

/// One row of the equidistribution table.
#[derive(Clone, Debug)]
pub struct EquidistRow {
    pub t: f64,
    pub k_average: f64,
    pub abs_deviation: f64,
}

#[derive(Clone, Debug)]
pub struct EquidistReport {
    pub rows: Vec<EquidistRow>,
    /// ∫f dv · ∫ν dk (K measure normalized).
    pub limit: f64,
    pub integral_f: f64,
    pub integral_nu: f64,
}

/// K-averages of the isotropic-excluded transform along a_t·K versus the
/// product of the space integral of f and the ν average.
#[allow(clippy::too_many_arguments)]
pub fn equidistribution_experiment(
    f: &SupportedFn,
    q: &QForm,
    t_grid: &[f64],
    nu: &dyn Fn(f64) -> f64,
    k_nodes: usize,
    mc_samples: u64,
    seed: u64,
    p: &HeightParams,
    cross_radius: f64,
    max_box: u64,
) -> Result<EquidistReport> {
    if q.signature()? != (2, 1) {
        return Err(Error::Signature("equidistribution needs signature (2,1)".into()));
    }
    if q.is_rational() {
        return Err(Error::Precondition("equidistribution needs an irrational form".into()));
    }
    let lat = lattice_from_form(q)?;
    let integral_f = volume_integral(f, mc_samples, seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut integral_nu = 0.0;
    for i in 0..k_nodes {
        integral_nu += nu(two_pi * i as f64 / k_nodes as f64);
    }
    integral_nu /= k_nodes as f64;
    let limit = integral_f * integral_nu;
    let mut filter =
        YFilter::new(&lat, SiegelVariant::IsotropicExcluded, p, cross_radius, 60, max_box)?;
    let mut rows = Vec::new();
    for &t in t_grid {
        let at = a_t(t);
        let mut avg = 0.0;
        for i in 0..k_nodes {
            let theta = two_pi * i as f64 / k_nodes as f64;
            let g = geom::mat_mul(&at, &k_rot(theta));
            let val = siegel_transform_with(f, &lat, &mut filter, &g, max_box)?;
            avg += val * nu(theta);
        }
        avg /= k_nodes as f64;
        rows.push(EquidistRow { t, k_average: avg, abs_deviation: (avg - limit).abs() });
    }
    Ok(EquidistReport { rows, limit, integral_f, integral_nu })
}

/// ∫ f dv over the declared support, by seeded Monte Carlo on the bounding box.
pub fn volume_integral(f: &SupportedFn, samples: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = f.outer;
    let mut sum = 0.0;
    for _ in 0..samples {
        let v = [rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s)];
        sum += f.eval(&v);
    }
    sum / samples as f64 * (2.0 * s).powi(3)
}
