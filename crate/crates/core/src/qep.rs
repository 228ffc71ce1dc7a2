//! Quadratic eigenvalue problem `(λ²M + λC + K) y = 0`.
//!
//! Eigenvalues come from the real Schur form of the first companion matrix
//! `[[0, I], [−M⁻¹K, −M⁻¹C]]`; each eigenvector is the right singular vector
//! of `Q(λ)` for its smallest singular value.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, SINGULAR_RCOND};
use crate::model::{block_order, is_real, real_block_matrix, FeedbackGains, FeedbackKind, PartialSpectrum, SecondOrderSystem, CONJUGATE_TOL};
use crate::{Error, Result, C64};

/// A quadratic pencil `λ²M + λC + K`, open or closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    pub m: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

impl Pencil {
    pub fn open_loop(system: &SecondOrderSystem) -> Self {
        Self {
            m: system.mass().clone(),
            c: system.damping().clone(),
            k: system.stiffness().clone(),
        }
    }

    pub fn dof(&self) -> usize {
        self.m.nrows()
    }

    /// `Q(λ) y`.
    pub fn apply(&self, lambda: C64, y: &DVector<C64>) -> DVector<C64> {
        self.eval(lambda) * y
    }

    /// `Q(λ)` as a complex matrix.
    pub fn eval(&self, lambda: C64) -> DMatrix<C64> {
        let l2 = lambda * lambda;
        DMatrix::from_fn(self.dof(), self.dof(), |i, j| {
            l2 * self.m[(i, j)] + lambda * self.c[(i, j)] + C64::new(self.k[(i, j)], 0.0)
        })
    }

    pub fn solve(&self) -> Result<Eigensystem> {
        solve_qep(&self.m, &self.c, &self.k)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        qep_eigenvalues(&self.m, &self.c, &self.k)
    }
}

/// All `2n` eigenpairs of a quadratic pencil.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Sorted by modulus, then real part, upper half-plane member first.
    pub values: Vec<C64>,
    /// `n×2n`, unit 2-norm columns; conjugate eigenvalues carry conjugate vectors.
    pub vectors: DMatrix<C64>,
    /// `‖Q(λ)y‖₂ / (|λ|²‖M‖_F + |λ|‖C‖_F + ‖K‖_F)` per pair.
    pub residuals: Vec<f64>,
}

impl Eigensystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> DVector<C64> {
        self.vectors.column(j).into_owned()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Index of the conjugate partner of a nonreal eigenvalue.
    pub fn conjugate_of(&self, j: usize) -> Option<usize> {
        let v = self.values[j];
        if is_real(v) {
            return None;
        }
        let target = v.conj();
        (0..self.len())
            .filter(|&i| i != j && !is_real(self.values[i]) && self.values[i].im.signum() != v.im.signum())
            .min_by(|&a, &b| {
                (self.values[a] - target)
                    .norm()
                    .total_cmp(&(self.values[b] - target).norm())
            })
    }
}

fn eigen_cmp(a: &C64, b: &C64) -> std::cmp::Ordering {
    let tol = 1e-12 * a.norm().max(b.norm()).max(1.0);
    if (a.norm() - b.norm()).abs() > tol {
        return a.norm().total_cmp(&b.norm());
    }
    if (a.re - b.re).abs() > tol {
        return a.re.total_cmp(&b.re);
    }
    b.im.total_cmp(&a.im)
}

/// Force exact conjugate symmetry on eigenvalues of a real matrix.
fn conjugate_closure(raw: Vec<C64>) -> Result<Vec<C64>> {
    let mut reals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for v in raw {
        if is_real(v) {
            reals.push(C64::new(v.re, 0.0));
        } else if v.im > 0.0 {
            upper.push(v);
        } else {
            lower.push(v);
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::Eigen("eigenvalues of a real matrix are not conjugation-closed".into()));
    }
    let mut out = reals;
    for u in upper {
        let (pos, _) = lower
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - u.conj()).norm().total_cmp(&(b.1 - u.conj()).norm()))
            .expect("equal counts");
        let w = lower.swap_remove(pos);
        let mean = (u + w.conj()) * 0.5;
        out.push(mean);
        out.push(mean.conj());
    }
    out.sort_by(eigen_cmp);
    Ok(out)
}

fn normalize_phase(mut y: DVector<C64>) -> DVector<C64> {
    let norm = y.norm();
    if norm == 0.0 {
        return y;
    }
    let (imax, _) = y
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 + 1e-12 * norm { (i, z.norm()) } else { acc });
    let phase = y[imax] / y[imax].norm();
    y.unscale_mut(norm);
    y.iter_mut().for_each(|z| *z /= phase);
    y
}

fn scale_of(pencil: &Pencil, lambda: C64) -> f64 {
    let a = lambda.norm();
    a * a * pencil.m.norm() + a * pencil.c.norm() + pencil.k.norm()
}

/// All `2n` eigenpairs of `λ²M + λC + K`.
/// Eigenvalues only, in the same order as [`solve_qep`].
pub fn qep_eigenvalues(m: &DMatrix<f64>, c: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 || !m.is_square() || c.shape() != m.shape() || k.shape() != m.shape() {
        return Err(Error::Dimension("M, C, K must be square of equal order".into()));
    }
    let minv = linalg::invert(m, "M", SINGULAR_RCOND)?.inverse;
    let mut companion = DMatrix::zeros(2 * n, 2 * n);
    companion.view_mut((0, n), (n, n)).fill_with_identity();
    companion.view_mut((n, 0), (n, n)).copy_from(&(-&minv * k));
    companion.view_mut((n, n), (n, n)).copy_from(&(-&minv * c));

    let schur = Schur::try_new(companion, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    conjugate_closure(schur.complex_eigenvalues().iter().cloned().collect())
}

pub fn solve_qep(m: &DMatrix<f64>, c: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<Eigensystem> {
    let n = m.nrows();
    if n == 0 || !m.is_square() || c.shape() != m.shape() || k.shape() != m.shape() {
        return Err(Error::Dimension("M, C, K must be square of equal order".into()));
    }
    let values = qep_eigenvalues(m, c, k)?;

    let pencil = Pencil { m: m.clone(), c: c.clone(), k: k.clone() };
    let mut vectors = DMatrix::<C64>::zeros(n, 2 * n);
    let mut done = vec![false; 2 * n];
    for j in 0..2 * n {
        if done[j] || values[j].im < 0.0 {
            continue;
        }
        // cluster of (numerically) repeated eigenvalues gets distinct null vectors
        let tol = CONJUGATE_TOL * values[j].norm().max(1.0);
        let cluster: Vec<usize> = (j..2 * n)
            .filter(|&i| !done[i] && values[i].im >= 0.0 && (values[i] - values[j]).norm() <= tol)
            .collect();
        let lambda = cluster.iter().map(|&i| values[i]).sum::<C64>() / cluster.len() as f64;
        let svd = pencil.eval(lambda).svd(false, true);
        let vt = svd.v_t.expect("requested");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        for (slot, &i) in cluster.iter().enumerate() {
            let row = order[slot.min(n - 1)];
            let mut y = DVector::from_iterator(n, vt.row(row).iter().map(|z| z.conj()));
            y = normalize_phase(y);
            if is_real(values[i]) {
                let re = y.map(|z| C64::new(z.re, 0.0));
                let nrm = re.norm();
                if nrm > 0.5 {
                    y = re.unscale(nrm);
                }
            }
            vectors.set_column(i, &y);
            done[i] = true;
        }
    }
    // lower half-plane members take the conjugate of their partner's vector
    for j in 0..2 * n {
        if values[j].im < 0.0 && !is_real(values[j]) {
            let partner = (0..2 * n)
                .filter(|&i| values[i].im > 0.0 && done[i])
                .min_by(|&a, &b| {
                    (values[a] - values[j].conj())
                        .norm()
                        .total_cmp(&(values[b] - values[j].conj()).norm())
                })
                .ok_or_else(|| Error::Eigen("unpaired complex eigenvalue".into()))?;
            let y = vectors.column(partner).map(|z| z.conj());
            vectors.set_column(j, &y);
            done[j] = true;
        }
    }

    let residuals = (0..2 * n)
        .map(|j| {
            let y = vectors.column(j).into_owned();
            pencil.apply(values[j], &y).norm() / scale_of(&pencil, values[j])
        })
        .collect();
    Ok(Eigensystem { values, vectors, residuals })
}

/// How to choose the eigenvalues to reassign.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    /// Explicit positions in the sorted eigenvalue list.
    Indices(Vec<usize>),
    /// For each value, the nearest eigenvalue together with its conjugate.
    Nearest(Vec<C64>),
    /// The `p` eigenvalues of smallest modulus.
    SmallestAbs(usize),
    /// The `p` eigenvalues of largest real part.
    LargestReal(usize),
}

/// Positions in `eig.values` chosen by `selector`, checked for conjugation
/// closure.
pub fn select_indices(eig: &Eigensystem, selector: &Selector) -> Result<Vec<usize>> {
    let total = eig.len();
    let mut idx: Vec<usize> = match selector {
        Selector::Indices(list) => {
            if let Some(&bad) = list.iter().find(|&&i| i >= total) {
                return Err(Error::Selection(format!("index {bad} out of range 0..{total}")));
            }
            list.clone()
        }
        Selector::Nearest(points) => {
            let mut chosen: Vec<usize> = Vec::new();
            for &z in points {
                let j = (0..total)
                    .filter(|i| !chosen.contains(i))
                    .min_by(|&a, &b| (eig.values[a] - z).norm().total_cmp(&(eig.values[b] - z).norm()))
                    .ok_or_else(|| Error::Selection("more points than eigenvalues".into()))?;
                chosen.push(j);
                if let Some(partner) = eig.conjugate_of(j) {
                    if !chosen.contains(&partner) {
                        chosen.push(partner);
                    }
                }
            }
            chosen
        }
        Selector::SmallestAbs(p) | Selector::LargestReal(p) => {
            let mut order: Vec<usize> = (0..total).collect();
            if let Selector::LargestReal(_) = selector {
                order.sort_by(|&a, &b| {
                    eig.values[b]
                        .re
                        .total_cmp(&eig.values[a].re)
                        .then(eig.values[a].norm().total_cmp(&eig.values[b].norm()))
                });
            }
            if *p > total {
                return Err(Error::Selection(format!("cannot select {p} of {total} eigenvalues")));
            }
            order.truncate(*p);
            order
        }
    };
    idx.sort_unstable();
    idx.dedup();
    if idx.is_empty() {
        return Err(Error::Selection("no eigenvalues selected (p = 0)".into()));
    }
    if idx.len() >= total {
        return Err(Error::Selection("cannot reassign the whole spectrum".into()));
    }
    for &j in &idx {
        if let Some(partner) = eig.conjugate_of(j) {
            if !idx.contains(&partner) {
                return Err(Error::Selection(format!(
                    "selection contains {} but not its conjugate",
                    eig.values[j]
                )));
            }
        }
    }
    Ok(idx)
}

/// Select eigenpairs and convert them to real block form.
///
/// Complex pairs come first in ascending modulus, then real eigenvalues. A pair
/// `α ± iβ` (β > 0) with unit eigenvector `y` contributes the block
/// `[[α, β], [−β, α]]` and the columns `Re y`, `Im y`.
pub fn select_partial(eig: &Eigensystem, selector: &Selector) -> Result<PartialSpectrum> {
    let idx = select_indices(eig, selector)?;
    let picked: Vec<C64> = idx.iter().map(|&j| eig.values[j]).collect();
    let (values, pairs) = block_order(&picked)?;
    let n = eig.vectors.nrows();
    let p = values.len();
    let mut vectors = DMatrix::zeros(n, p);
    let mut used = vec![false; idx.len()];
    let mut source_indices = Vec::with_capacity(p);
    let mut col = 0;
    while col < p {
        let v = values[col];
        let (slot, &j) = idx
            .iter()
            .enumerate()
            .filter(|(s, _)| !used[*s])
            .min_by(|a, b| (eig.values[*a.1] - v).norm().total_cmp(&(eig.values[*b.1] - v).norm()))
            .expect("value came from the selection");
        used[slot] = true;
        let y = eig.vector(j);
        if col < 2 * pairs {
            let y = y.unscale(y.norm());
            vectors.set_column(col, &y.map(|z| z.re));
            vectors.set_column(col + 1, &y.map(|z| z.im));
            let partner = eig.conjugate_of(j).expect("complex");
            let pslot = idx.iter().position(|&i| i == partner).expect("closed selection");
            used[pslot] = true;
            source_indices.push(j);
            source_indices.push(partner);
            col += 2;
        } else {
            let re = y.map(|z| z.re);
            vectors.set_column(col, &re.unscale(re.norm()));
            source_indices.push(j);
            col += 1;
        }
    }
    Ok(PartialSpectrum {
        lambda: real_block_matrix(&values),
        vectors,
        values,
        pairs,
        source_indices,
    })
}

/// `(M, C−BF, K−BG)` for state feedback, `(M−BG, C−BF, K)` for derivative
/// feedback. Fails when the closed-loop mass is singular.
pub fn closed_loop_pencil(system: &SecondOrderSystem, gains: &FeedbackGains) -> Result<Pencil> {
    let (m, n) = (system.inputs(), system.dof());
    if gains.f.shape() != (m, n) || gains.g.shape() != (m, n) {
        return Err(Error::Dimension(format!(
            "gains must be {m}x{n}, got F {:?}, G {:?}",
            gains.f.shape(),
            gains.g.shape()
        )));
    }
    let b = system.input();
    let c = system.damping() - b * &gains.f;
    let pencil = match gains.kind {
        FeedbackKind::State => Pencil {
            m: system.mass().clone(),
            c,
            k: system.stiffness() - b * &gains.g,
        },
        FeedbackKind::Derivative => Pencil {
            m: system.mass() - b * &gains.g,
            c,
            k: system.stiffness().clone(),
        },
    };
    linalg::invert(&pencil.m, "closed-loop mass", SINGULAR_RCOND)?;
    Ok(pencil)
}

/// Sum and product of all `2n` eigenvalues of a real pencil, both real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralAggregates {
    /// `−tr(M⁻¹C)`.
    pub sum: f64,
    /// `det K / det M`.
    pub product: f64,
}

/// Eigenvalue sum and product from traces and determinants, without an
/// eigen-decomposition.
pub fn spectrum_sum_product(pencil: &Pencil) -> Result<SpectralAggregates> {
    let minv = linalg::invert(&pencil.m, "closed-loop mass", SINGULAR_RCOND)?;
    let sum = -(&minv.inverse * &pencil.c).trace();
    let (ks, kl) = linalg::log_det(&pencil.k);
    let product = if ks == 0.0 {
        0.0
    } else {
        ks * minv.det_sign * (kl - minv.log_abs_det).exp()
    };
    Ok(SpectralAggregates { sum, product })
}

/// Eigen-decomposition of a (closed-loop) pencil with the realified,
/// column-normalised `2n×2n` matrix of stacked eigenvectors `[y; λy]`.
#[derive(Debug, Clone)]
pub struct ClosedLoopEigensystem {
    pub eig: Eigensystem,
    pub yc: DMatrix<f64>,
}

impl ClosedLoopEigensystem {
    pub fn new(eig: Eigensystem) -> Self {
        let n = eig.vectors.nrows();
        let mut yc = DMatrix::zeros(2 * n, 2 * n);
        let mut col = 0;
        for (j, &lambda) in eig.values.iter().enumerate() {
            let real = is_real(lambda);
            if !real && lambda.im < 0.0 {
                continue;
            }
            let y = eig.vector(j);
            let stacked = DVector::from_iterator(2 * n, y.iter().cloned().chain(y.iter().map(|z| z * lambda)));
            let re = stacked.map(|z| z.re);
            yc.set_column(col, &re.unscale(re.norm()));
            col += 1;
            if !real {
                let im = stacked.map(|z| z.im);
                yc.set_column(col, &im.unscale(im.norm()));
                col += 1;
            }
        }
        debug_assert_eq!(col, 2 * n);
        Self { eig, yc }
    }

    pub fn from_pencil(pencil: &Pencil) -> Result<Self> {
        Ok(Self::new(pencil.solve()?))
    }

    /// κ₂ of the normalised `Y_c`.
    pub fn kappa2(&self) -> f64 {
        kappa2(&self.yc)
    }
}

/// Spectral condition number `σ_max / σ_min`; infinite when
/// `σ_min < 1e-14 σ_max`.
pub fn kappa2(yc: &DMatrix<f64>) -> f64 {
    linalg::condition_number(yc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_example;
    use nalgebra::dmatrix;

    fn sorted_imag(eig: &Eigensystem) -> Vec<f64> {
        let mut v: Vec<f64> = eig.values.iter().map(|z| z.im).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn unit_oscillators() {
        let i2 = DMatrix::identity(2, 2);
        let eig = solve_qep(&i2, &DMatrix::zeros(2, 2), &i2).unwrap();
        assert_eq!(eig.len(), 4);
        for z in &eig.values {
            assert!(z.re.abs() < 1e-12 && (z.im.abs() - 1.0).abs() < 1e-12);
        }
        assert!(eig.max_residual() < 1e-12);
        // the two eigenvectors of +i must be independent
        let up: Vec<usize> = (0..4).filter(|&j| eig.values[j].im > 0.0).collect();
        let a = eig.vector(up[0]);
        let b = eig.vector(up[1]);
        assert!(a.dotc(&b).norm() < 1e-8);
    }

    #[test]
    fn exp4_natural_frequencies() {
        let p = builtin_example("exp4_absorber").unwrap();
        let eig = Pencil::open_loop(&p.system).solve().unwrap();
        let im = sorted_imag(&eig);
        let expect = [-2.1108, -1.4142, -0.4737, 0.4737, 1.4142, 2.1108];
        for (a, b) in im.iter().zip(expect) {
            assert!((a - b).abs() < 5e-5, "{a} vs {b}");
        }
        assert!(eig.values.iter().all(|z| z.re.abs() < 1e-10));
    }

    #[test]
    fn exp3_contains_reference_pair() {
        let p = builtin_example("exp3_fourdof").unwrap();
        let eig = Pencil::open_loop(&p.system).solve().unwrap();
        let hit = eig
            .values
            .iter()
            .any(|z| (z.re - -0.0385).abs() < 5e-5 && (z.im - 4.1362).abs() < 5e-5);
        assert!(hit, "{:?}", eig.values);
    }

    #[test]
    fn singular_mass_rejected() {
        let z = DMatrix::zeros(2, 2);
        assert!(matches!(solve_qep(&z, &z, &DMatrix::identity(2, 2)), Err(Error::Singular { .. })));
    }

    #[test]
    fn select_nearest_exp1() {
        let p = builtin_example("exp1_random5").unwrap();
        let eig = Pencil::open_loop(&p.system).solve().unwrap();
        let part = select_partial(&eig, &p.selector).unwrap();
        assert_eq!(part.len(), 2);
        assert_eq!(part.pairs, 1);
        let expect = dmatrix![-0.2551, 1.3772; -1.3772, -0.2551];
        assert!((&part.lambda - expect).amax() < 5e-5, "{}", part.lambda);
    }

    #[test]
    fn partial_satisfies_real_quadratic_relation() {
        for name in crate::model::BUILTIN_NAMES {
            let p = builtin_example(name).unwrap();
            let eig = Pencil::open_loop(&p.system).solve().unwrap();
            let part = select_partial(&eig, &p.selector).unwrap();
            let (m, c, k) = (p.system.mass(), p.system.damping(), p.system.stiffness());
            let y = &part.vectors;
            let l = &part.lambda;
            let r = m * y * l * l + c * y * l + k * y;
            assert!(r.norm() < 1e-8 * p.system.scale(), "{name}: {}", r.norm());
        }
    }

    #[test]
    fn conjugate_half_selection_rejected() {
        let p = builtin_example("exp3_fourdof").unwrap();
        let eig = Pencil::open_loop(&p.system).solve().unwrap();
        let j = eig.values.iter().position(|z| z.im > 0.1).unwrap();
        assert!(matches!(select_indices(&eig, &Selector::Indices(vec![j])), Err(Error::Selection(_))));
        assert!(matches!(select_indices(&eig, &Selector::Indices(vec![])), Err(Error::Selection(_))));
    }

    #[test]
    fn smallest_abs_exp6() {
        let p = builtin_example("exp6_tridiag40").unwrap();
        let eig = Pencil::open_loop(&p.system).solve().unwrap();
        let part = select_partial(&eig, &p.selector).unwrap();
        assert_eq!(part.len(), 4);
        assert_eq!(part.pairs, 2);
        let mut mags: Vec<f64> = eig.values.iter().map(|z| z.norm()).collect();
        mags.sort_by(f64::total_cmp);
        let mut chosen: Vec<f64> = part.values.iter().map(|z| z.norm()).collect();
        chosen.sort_by(f64::total_cmp);
        for (a, b) in chosen.iter().zip(&mags[..4]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gains_leave_pencil_unchanged() {
        let p = builtin_example("exp3_fourdof").unwrap();
        let g = FeedbackGains::zero(2, 4, FeedbackKind::State);
        assert_eq!(closed_loop_pencil(&p.system, &g).unwrap(), Pencil::open_loop(&p.system));
        let g = FeedbackGains::zero(2, 4, FeedbackKind::Derivative);
        assert_eq!(closed_loop_pencil(&p.system, &g).unwrap(), Pencil::open_loop(&p.system));
    }

    #[test]
    fn derivative_gain_cancelling_mass_is_singular() {
        // B = [I; 0] with G = [I 0] gives M − BG singular for M = I
        let sys = SecondOrderSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            dmatrix![1.0; 0.0],
        )
        .unwrap();
        let g = FeedbackGains::new(dmatrix![0.0, 0.0], dmatrix![1.0, 0.0], FeedbackKind::Derivative).unwrap();
        assert!(matches!(closed_loop_pencil(&sys, &g), Err(Error::Singular { .. })));
    }

    #[test]
    fn sum_product_identities() {
        let p = builtin_example("exp4_absorber").unwrap();
        let agg = spectrum_sum_product(&Pencil::open_loop(&p.system)).unwrap();
        assert!(agg.sum.abs() < 1e-14);
        assert!((agg.product - 2.0).abs() < 1e-12);

        let n = 3;
        let pencil = Pencil {
            m: DMatrix::identity(n, n),
            c: DMatrix::identity(n, n) * 2.0,
            k: DMatrix::identity(n, n),
        };
        let agg = spectrum_sum_product(&pencil).unwrap();
        assert!((agg.sum + 6.0).abs() < 1e-14);
        assert!((agg.product - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sum_product_match_eigenvalues_on_builtins() {
        for name in crate::model::BUILTIN_NAMES {
            let p = builtin_example(name).unwrap();
            let pencil = Pencil::open_loop(&p.system);
            let eig = pencil.solve().unwrap();
            let agg = spectrum_sum_product(&pencil).unwrap();
            let s: C64 = eig.values.iter().sum();
            let prod: C64 = eig.values.iter().product();
            let ts = 1e-8 * eig.values.iter().map(|z| z.norm()).sum::<f64>();
            assert!((s.re - agg.sum).abs() <= ts && s.im.abs() <= ts, "{name}: {s} vs {}", agg.sum);
            assert!((prod.re - agg.product).abs() <= 1e-8 * agg.product.abs(), "{name}: {prod} vs {}", agg.product);
        }
    }

    #[test]
    fn kappa_trivial_cases() {
        let q = dmatrix![0.6, -0.8; 0.8, 0.6];
        assert!((kappa2(&q) - 1.0).abs() < 1e-12);
        assert!((kappa2(&dmatrix![1.0, 0.0; 0.0, 10.0]) - 10.0).abs() < 1e-12);
        assert!(kappa2(&dmatrix![1.0, 1.0; 1.0, 1.0]).is_infinite());
    }

    #[test]
    fn realified_eigenvector_matrix_is_square() {
        let p = builtin_example("exp3_fourdof").unwrap();
        let cl = ClosedLoopEigensystem::from_pencil(&Pencil::open_loop(&p.system)).unwrap();
        assert_eq!(cl.yc.shape(), (8, 8));
        for j in 0..8 {
            assert!((cl.yc.column(j).norm() - 1.0).abs() < 1e-12);
        }
        assert!(cl.kappa2().is_finite());
    }
}
