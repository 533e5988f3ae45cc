//! Precoder update.
//!
//! For a fixed multiplier `μ` the Lagrangian splits per user into
//! `w_kᴴVw_k − 2Re(v_kᵀw_k)` with `V = Σ_i c_i|β_i|² f_i* f_iᵀ + μI` and
//! `v_k = c_k β_k f_k`. Without quantisation the minimiser is `V⁻¹v_k*`.
//! With quantisation the per-user problem is a real MILS: writing
//! `w̃ = [Re w; Im w]`, the objective is `w̃ᵀṼw̃ − 2b̃ᵀw̃` with `Ṽ` the real
//! embedding of `V` and `b̃ = [Re v_k; −Im v_k]`. The real Cholesky factor
//! `Ṽ = R̃ᵀR̃` and `d̃ = R̃⁻ᵀb̃` turn it into `‖d̃ − R̃w̃‖² − ‖d̃‖²`, solved by
//! sphere decoding over the quantiser labels.

use nalgebra::DVector;
use num_complex::Complex64;

use super::{BisectionConfig, WmmseError};
use crate::linalg::{cholesky_upper, real_embedding, solve_upper_adjoint, unstack_real, CMatrix, CVector};
use crate::metrics::total_power;
use crate::mils::{sesd_real, RealLabels, SesdOptions, TriangularSystem};
use crate::quantizer::QuantizerSpec;

const PIVOT_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum PrecoderMode {
    Infinite,
    Quantized(QuantizerSpec),
}

/// How a quantised precoder is obtained at a fixed `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecodingStrategy {
    /// Exact per-user sphere decoding.
    Sesd,
    /// Quantise the unconstrained minimiser entry by entry.
    NearestPoint,
    /// Start from the nearest point and sweep single real components,
    /// each set to its best label with the others fixed.
    CoordinateDescent { max_sweeps: usize },
}

/// `(V, [v_1, …, v_K])` for the given multiplier.
pub fn precoding_system(mu: f64, c: &[f64], beta: &[Complex64], f: &[CVector]) -> (CMatrix, Vec<CVector>) {
    let m = f.first().map_or(0, |fk| fk.len());
    let mut v = CMatrix::identity(m, m) * Complex64::new(mu, 0.0);
    for ((fi, ci), bi) in f.iter().zip(c).zip(beta) {
        let conj = fi.map(|z| z.conj());
        v += (&conj * fi.transpose()) * Complex64::new(ci * bi.norm_sqr(), 0.0);
    }
    let vk = f.iter().zip(c).zip(beta).map(|((fk, ck), bk)| fk * (bk * *ck)).collect();
    (v, vk)
}

/// `w_kᴴVw_k − 2Re(v_kᵀw_k)`.
pub fn precoding_objective(v: &CMatrix, vk: &CVector, wk: &CVector) -> f64 {
    let quad = (wk.adjoint() * v * wk)[(0, 0)].re;
    let lin: Complex64 = vk.iter().zip(wk.iter()).map(|(a, b)| a * b).sum();
    quad - 2.0 * lin.re
}

/// Unconstrained minimiser `w_k = V⁻¹v_k*` for every user.
pub fn infinite_precoding(mu: f64, c: &[f64], beta: &[Complex64], f: &[CVector]) -> Result<CMatrix, WmmseError> {
    let (v, vk) = precoding_system(mu, c, beta, f);
    infinite_from_system(&v, &vk)
}

fn infinite_from_system(v: &CMatrix, vk: &[CVector]) -> Result<CMatrix, WmmseError> {
    let r = cholesky_upper(v, PIVOT_REL_TOL).map_err(|_| WmmseError::SingularPrecodingMatrix)?;
    let mut w = CMatrix::zeros(v.nrows(), vk.len());
    for (k, vkk) in vk.iter().enumerate() {
        let y = solve_upper_adjoint(&r, &vkk.map(|z| z.conj()));
        let col = r.solve_upper_triangular(&y).ok_or(WmmseError::SingularPrecodingMatrix)?;
        w.set_column(k, &col);
    }
    Ok(w)
}

/// Real triangular form of every user's quantised sub-problem.
struct RealForm {
    r: nalgebra::DMatrix<f64>,
    targets: Vec<DVector<f64>>,
}

fn real_form(v: &CMatrix, vk: &[CVector]) -> Result<RealForm, WmmseError> {
    let embedded = real_embedding(v).map(|x| Complex64::new(x, 0.0));
    let rc = cholesky_upper(&embedded, PIVOT_REL_TOL).map_err(|_| WmmseError::SingularPrecodingMatrix)?;
    let m = v.nrows();
    let targets = vk
        .iter()
        .map(|vkk| {
            let b = CVector::from_fn(2 * m, |i, _| {
                Complex64::new(if i < m { vkk[i].re } else { -vkk[i - m].im }, 0.0)
            });
            solve_upper_adjoint(&rc, &b).map(|z| z.re)
        })
        .collect();
    Ok(RealForm { r: rc.map(|z| z.re), targets })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedMuPrecoding {
    pub w: CMatrix,
    pub nodes_visited: u64,
    pub budget_exhausted: bool,
}

/// Quantised precoder at a fixed `μ`, each column the exact minimiser over
/// the quantiser alphabet.
pub fn precode_fixed_mu(
    mu: f64,
    c: &[f64],
    beta: &[Complex64],
    f: &[CVector],
    quantizer: &QuantizerSpec,
    opts: SesdOptions,
) -> Result<FixedMuPrecoding, WmmseError> {
    precode_at_mu(mu, c, beta, f, &PrecoderMode::Quantized(quantizer.clone()), PrecodingStrategy::Sesd, opts)
}

pub(crate) fn precode_at_mu(
    mu: f64,
    c: &[f64],
    beta: &[Complex64],
    f: &[CVector],
    mode: &PrecoderMode,
    strategy: PrecodingStrategy,
    opts: SesdOptions,
) -> Result<FixedMuPrecoding, WmmseError> {
    let (v, vk) = precoding_system(mu, c, beta, f);
    let quantizer = match mode {
        PrecoderMode::Infinite => {
            let w = infinite_from_system(&v, &vk)?;
            return Ok(FixedMuPrecoding { w, nodes_visited: 0, budget_exhausted: false });
        }
        PrecoderMode::Quantized(q) => q,
    };
    let m = v.nrows();
    let mut w = CMatrix::zeros(m, vk.len());
    let mut nodes = 0;
    let mut exhausted = false;
    match strategy {
        PrecodingStrategy::NearestPoint => {
            let inf = infinite_from_system(&v, &vk)?;
            for (dst, src) in w.iter_mut().zip(inf.iter()) {
                *dst = quantizer.quantize(*src)?;
            }
        }
        PrecodingStrategy::Sesd => {
            let form = real_form(&v, &vk)?;
            let labels = quantizer.label_set();
            for (k, d) in form.targets.into_iter().enumerate() {
                let sys = TriangularSystem::new(form.r.clone(), d)?;
                let out = sesd_real(&sys, &labels, opts)?;
                nodes += out.nodes_visited;
                exhausted |= out.budget_exhausted;
                w.set_column(k, &unstack_real(&out.x));
            }
        }
        PrecodingStrategy::CoordinateDescent { max_sweeps } => {
            let inf = infinite_from_system(&v, &vk)?;
            let form = real_form(&v, &vk)?;
            let labels = quantizer.label_set();
            for (k, d) in form.targets.iter().enumerate() {
                let start: Vec<f64> = (0..2 * m)
                    .map(|i| {
                        let z = inf[(i % m, k)];
                        quantizer.quantize_real(if i < m { z.re } else { z.im })
                    })
                    .collect::<Result<_, _>>()?;
                let (x, evals) = real_coordinate_descent(&form.r, d, start, &labels, max_sweeps);
                nodes += evals;
                w.set_column(k, &unstack_real(&x));
            }
        }
    }
    Ok(FixedMuPrecoding { w, nodes_visited: nodes, budget_exhausted: exhausted })
}

/// Coordinate descent on `‖d − Rx‖²` over `labels^n`: each coordinate in
/// turn moves to its best label if that strictly lowers the residual.
/// Returns the point and the number of candidate evaluations.
pub(crate) fn real_coordinate_descent(
    r: &nalgebra::DMatrix<f64>,
    d: &DVector<f64>,
    mut x: Vec<f64>,
    labels: &RealLabels,
    max_sweeps: usize,
) -> (Vec<f64>, u64) {
    let n = x.len();
    let mut res = d - r * DVector::from_column_slice(&x);
    let col_sq: Vec<f64> = (0..n).map(|j| r.column(j).norm_squared()).collect();
    let mut evals = 0;
    for _ in 0..max_sweeps {
        let mut changed = false;
        for j in 0..n {
            let proj = r.column(j).dot(&res);
            // change of ‖res‖² when x_j moves by δ: −2δ·proj + δ²‖R_j‖²
            let mut best = (0.0, x[j]);
            for &l in labels.values() {
                evals += 1;
                let delta = l - x[j];
                let change = -2.0 * delta * proj + delta * delta * col_sq[j];
                if change < best.0 {
                    best = (change, l);
                }
            }
            if best.1 != x[j] {
                let delta = best.1 - x[j];
                res.axpy(-delta, &r.column(j), 1.0);
                x[j] = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (x, evals)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionOutcome {
    pub w: CMatrix,
    pub mu: f64,
    pub power: f64,
    /// The budget could not be met even at the largest multiplier tried.
    pub power_floor_reached: bool,
    pub evaluations: usize,
    /// Steps where the power was not between its values at the bracket ends.
    pub monotonicity_violations: usize,
    pub nodes_visited: u64,
    pub budget_exhausted: bool,
}

/// Smallest multiplier in the bracket whose precoder meets the budget `p`.
///
/// The lower end is `μ_min = mu_min_rel · trace(V|_{μ=0}) / M`; if that
/// already meets the budget it is returned. Otherwise the upper end starts
/// at 1 (or `10 μ_min` if larger) and grows ×10 until feasible, then the
/// bracket is bisected (geometrically while it spans more than a factor 4)
/// until the power lies in `[power_lo·p, p]` or the bracket is narrower than
/// `1e−12·μ_hi`. The returned precoder is always the feasible upper end.
#[allow(clippy::too_many_arguments)]
pub fn precode_bisection(
    p: f64,
    c: &[f64],
    beta: &[Complex64],
    f: &[CVector],
    mode: &PrecoderMode,
    strategy: PrecodingStrategy,
    cfg: &BisectionConfig,
    opts: SesdOptions,
) -> Result<BisectionOutcome, WmmseError> {
    if !(p > 0.0) {
        return Err(WmmseError::InvalidConfig(format!("power budget must be positive, got {p}")));
    }
    let m = f.first().map_or(1, |fk| fk.len()).max(1);
    let (v0, _) = precoding_system(0.0, c, beta, f);
    let trace: f64 = v0.diagonal().iter().map(|z| z.re).sum();
    let mu_min = cfg.mu_min_rel * if trace > 0.0 { trace / m as f64 } else { 1.0 };

    let mut evaluations = 0;
    let mut nodes = 0;
    let mut exhausted = false;
    let mut eval = |mu: f64| -> Result<(CMatrix, f64), WmmseError> {
        let out = precode_at_mu(mu, c, beta, f, mode, strategy, opts)?;
        evaluations += 1;
        nodes += out.nodes_visited;
        exhausted |= out.budget_exhausted;
        let power = total_power(&out.w);
        Ok((out.w, power))
    };

    let (w_lo, p_lo) = eval(mu_min)?;
    let mut lo = (mu_min, p_lo);
    let mut violations = 0;
    let finish = |w, mu, power, floor, ev, viol, nodes, ex| BisectionOutcome {
        w,
        mu,
        power,
        power_floor_reached: floor,
        evaluations: ev,
        monotonicity_violations: viol,
        nodes_visited: nodes,
        budget_exhausted: ex,
    };
    if p_lo <= p {
        return Ok(finish(w_lo, mu_min, p_lo, false, evaluations, 0, nodes, exhausted));
    }

    let mut hi_mu = if 10.0 * mu_min > 1.0 { 10.0 * mu_min } else { 1.0 };
    let (mut w_hi, mut p_hi) = eval(hi_mu)?;
    let mut growth = 0;
    while p_hi > p && growth < cfg.max_growth {
        if p_hi > lo.1 * (1.0 + 1e-9) {
            violations += 1;
        }
        lo = (hi_mu, p_hi);
        hi_mu *= 10.0;
        growth += 1;
        (w_hi, p_hi) = eval(hi_mu)?;
    }
    if p_hi > p {
        return Ok(finish(w_hi, hi_mu, p_hi, true, evaluations, violations, nodes, exhausted));
    }

    for _ in 0..cfg.max_steps {
        if p_hi >= cfg.power_lo * p || hi_mu - lo.0 < 1e-12 * hi_mu {
            break;
        }
        let mid = if hi_mu > 4.0 * lo.0 { (lo.0 * hi_mu).sqrt() } else { 0.5 * (lo.0 + hi_mu) };
        let (w_mid, p_mid) = eval(mid)?;
        if p_mid > lo.1 * (1.0 + 1e-9) || p_mid < p_hi * (1.0 - 1e-9) {
            violations += 1;
        }
        if p_mid <= p {
            hi_mu = mid;
            w_hi = w_mid;
            p_hi = p_mid;
        } else {
            lo = (mid, p_mid);
        }
    }
    Ok(finish(w_hi, hi_mu, p_hi, false, evaluations, violations, nodes, exhausted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::stack_real;
    use crate::mils::residual_sq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_instance(rng: &mut ChaCha8Rng, m: usize, k: usize) -> (Vec<f64>, Vec<Complex64>, Vec<CVector>) {
        let f = (0..k)
            .map(|_| CVector::from_fn(m, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
            .collect();
        let cw = (0..k).map(|_| 0.5 + rng.random::<f64>()).collect();
        let beta = (0..k).map(|_| c(rng.random::<f64>() + 0.2, rng.random::<f64>() - 0.5)).collect();
        (cw, beta, f)
    }

    #[test]
    fn scalar_closed_form() {
        let (cw, beta, f) = (vec![1.3], vec![c(0.4, -0.2)], vec![CVector::from_vec(vec![c(0.7, 0.9)])]);
        let mu = 0.25;
        let w = infinite_precoding(mu, &cw, &beta, &f).unwrap();
        let expected = cw[0] * beta[0].conj() * f[0][0].conj() / (cw[0] * beta[0].norm_sqr() * f[0][0].norm_sqr() + mu);
        assert!((w[(0, 0)] - expected).norm() < 1e-14);
    }

    #[test]
    fn singular_at_zero_multiplier() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (cw, beta, f) = random_instance(&mut rng, 4, 2);
        assert_eq!(infinite_precoding(0.0, &cw, &beta, &f), Err(WmmseError::SingularPrecodingMatrix));
    }

    #[test]
    fn large_multiplier_shrinks_precoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (cw, beta, f) = random_instance(&mut rng, 3, 2);
        let small = total_power(&infinite_precoding(1e2, &cw, &beta, &f).unwrap());
        let tiny = total_power(&infinite_precoding(1e8, &cw, &beta, &f).unwrap());
        assert!(tiny < small * 1e-10);
    }

    #[test]
    fn lagrangian_gradient_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (cw, beta, f) = random_instance(&mut rng, 3, 2);
        let mu = 0.3;
        let w = infinite_precoding(mu, &cw, &beta, &f).unwrap();
        let (v, vk) = precoding_system(mu, &cw, &beta, &f);
        let h = 1e-6;
        for k in 0..2 {
            for i in 0..3 {
                for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                    let mut plus = w.column(k).into_owned();
                    let mut minus = plus.clone();
                    plus[i] += dir * h;
                    minus[i] -= dir * h;
                    let g = (precoding_objective(&v, &vk[k], &plus) - precoding_objective(&v, &vk[k], &minus)) / (2.0 * h);
                    assert!(g.abs() < 1e-8, "gradient {g}");
                }
            }
        }
    }

    #[test]
    fn real_form_matches_complex_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (cw, beta, f) = random_instance(&mut rng, 3, 2);
        let (v, vk) = precoding_system(0.7, &cw, &beta, &f);
        let form = real_form(&v, &vk).unwrap();
        // complex Cholesky form and its real stacking
        let rc = cholesky_upper(&v, 1e-14).unwrap();
        for _ in 0..20 {
            let w = CVector::from_fn(3, |_, _| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0));
            for k in 0..2 {
                let obj = precoding_objective(&v, &vk[k], &w);
                let d = solve_upper_adjoint(&rc, &vk[k].map(|z| z.conj()));
                let complex_res = (&d - &rc * &w).norm_squared() - d.norm_squared();
                let stacked = (stack_real(&d) - real_embedding(&rc) * stack_real(&w)).norm_squared() - d.norm_squared();
                let ours = residual_sq(&form.r, &form.targets[k], stack_real(&w).as_slice()) - form.targets[k].norm_squared();
                assert!((obj - complex_res).abs() < 1e-12);
                assert!((complex_res - stacked).abs() < 1e-12);
                assert!((obj - ours).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_exhaustive_search_two_antennas() {
        let q = QuantizerSpec::new(4, 0.5).unwrap();
        let labels = q.labels().to_vec();
        let alphabet: Vec<Complex64> =
            labels.iter().flat_map(|re| labels.iter().map(move |im| c(*re, *im))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (cw, beta, f) = random_instance(&mut rng, 2, 1);
            let mu = 0.05 + rng.random::<f64>();
            let out = precode_fixed_mu(mu, &cw, &beta, &f, &q, SesdOptions::default()).unwrap();
            let (v, vk) = precoding_system(mu, &cw, &beta, &f);
            let mut best = f64::INFINITY;
            for a in &alphabet {
                for b in &alphabet {
                    best = best.min(precoding_objective(&v, &vk[0], &CVector::from_vec(vec![*a, *b])));
                }
            }
            let got = precoding_objective(&v, &vk[0], &out.w.column(0).into_owned());
            assert!((got - best).abs() <= 1e-12 * best.abs().max(1.0));
        }
    }

    #[test]
    fn fine_grid_tracks_unquantized_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (cw, beta, f) = random_instance(&mut rng, 2, 2);
        // μ dominates so that V is close to a multiple of the identity
        let mu = 50.0;
        let inf = infinite_precoding(mu, &cw, &beta, &f).unwrap();
        let span = inf.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
        let q = QuantizerSpec::new(1 << 10, 2.2 * span / 1024.0).unwrap();
        let out = precode_fixed_mu(mu, &cw, &beta, &f, &q, SesdOptions::default()).unwrap();
        for (a, b) in out.w.iter().zip(inf.iter()) {
            assert!((a.re - b.re).abs() <= q.step() / 2.0 + 1e-15);
            assert!((a.im - b.im).abs() <= q.step() / 2.0 + 1e-15);
        }
    }

    #[test]
    fn strategies_are_ordered_on_same_subproblem() {
        let q = QuantizerSpec::new(4, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (cw, beta, f) = random_instance(&mut rng, 3, 2);
            let mu = 0.01 + rng.random::<f64>();
            let (v, vk) = precoding_system(mu, &cw, &beta, &f);
            let mode = PrecoderMode::Quantized(q.clone());
            let run = |s| precode_at_mu(mu, &cw, &beta, &f, &mode, s, SesdOptions::default()).unwrap().w;
            let (ws, wc, wn) =
                (run(PrecodingStrategy::Sesd), run(PrecodingStrategy::CoordinateDescent { max_sweeps: 50 }), run(PrecodingStrategy::NearestPoint));
            for k in 0..2 {
                let obj = |w: &CMatrix| precoding_objective(&v, &vk[k], &w.column(k).into_owned());
                assert!(obj(&ws) <= obj(&wc) + 1e-12);
                assert!(obj(&wc) <= obj(&wn) + 1e-12);
            }
        }
    }

    #[test]
    fn bisection_meets_band_without_quantization() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (cw, beta, f) = random_instance(&mut rng, 4, 2);
        for p in [1e-3, 0.1, 1.0] {
            let out = precode_bisection(p, &cw, &beta, &f, &PrecoderMode::Infinite, PrecodingStrategy::Sesd, &BisectionConfig::default(), SesdOptions::default()).unwrap();
            assert!(!out.power_floor_reached);
            assert!(out.power <= p && out.power >= 0.99 * p, "p={p} power={}", out.power);
            assert_eq!(out.monotonicity_violations, 0);
        }
    }

    #[test]
    fn generous_budget_stops_at_lower_end() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (cw, beta, f) = random_instance(&mut rng, 2, 2);
        let q = QuantizerSpec::new(4, 0.01).unwrap();
        let out = precode_bisection(1e6, &cw, &beta, &f, &PrecoderMode::Quantized(q), PrecodingStrategy::Sesd, &BisectionConfig::default(), SesdOptions::default()).unwrap();
        assert!(!out.power_floor_reached);
        assert_eq!(out.evaluations, 1);
        assert!(out.power <= 1e6);
    }

    #[test]
    fn two_level_power_floor_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (cw, beta, f) = random_instance(&mut rng, 3, 2);
        let delta = 1.0;
        let q = QuantizerSpec::new(2, delta).unwrap();
        // every entry has power Δ²/2, so the least achievable total is K·M·Δ²/2
        let floor = 2.0 * 3.0 * delta * delta / 2.0;
        let run = |p: f64| precode_bisection(p, &cw, &beta, &f, &PrecoderMode::Quantized(q.clone()), PrecodingStrategy::Sesd, &BisectionConfig::default(), SesdOptions::default()).unwrap();
        let below = run(0.9 * floor);
        assert!(below.power_floor_reached);
        assert!((below.power - floor).abs() < 1e-12);
        let above = run(floor);
        assert!(!above.power_floor_reached && above.power <= floor);
    }
}
