//! The Riemannian cone `M × ℝ₊` with metric `t²g ⊕ dt²`, modelled on graded
//! sums `Σ t^w α + Σ t^w dt ∧ β` of invariant base forms; the G2 3-form built
//! from an SU(3)-structure, stability and metric extraction for 3-forms in
//! seven dimensions, and the closed/co-closed test.
//!
//! The 7-dimensional coframe is `(e^1, …, e^6, dt)`, oriented by `Vol_g ∧ dt`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::constants::{STABLE_FORM_FACTOR, TOL_STRUCTURE};
use crate::error::{GeometryError, Result};
use crate::frame::CoframeAlgebra;
use crate::linalg;
use crate::multilinear::{Form, Metric, C64};
use crate::su3::SU3Structure;

const BASE: usize = 6;
const DT: usize = 6;

/// A form on the cone: `Σ_w t^w plain[w] + Σ_w t^w dt ∧ dt_part[w]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeForm {
    degree: usize,
    plain: BTreeMap<i32, Form>,
    dt: BTreeMap<i32, Form>,
}

impl ConeForm {
    pub fn zero(degree: usize) -> Self {
        ConeForm { degree, plain: BTreeMap::new(), dt: BTreeMap::new() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Adds `t^w α`.
    pub fn add_plain(&mut self, w: i32, a: &Form) {
        assert_eq!((a.dim(), a.degree()), (BASE, self.degree), "plain term has the wrong shape");
        *self.plain.entry(w).or_insert_with(|| Form::zero(BASE, self.degree)) += a;
    }

    /// Adds `t^w dt ∧ β`.
    pub fn add_dt(&mut self, w: i32, b: &Form) {
        assert!(self.degree >= 1);
        assert_eq!((b.dim(), b.degree()), (BASE, self.degree - 1), "dt term has the wrong shape");
        *self.dt.entry(w).or_insert_with(|| Form::zero(BASE, self.degree - 1)) += b;
    }

    pub fn plain(&self) -> &BTreeMap<i32, Form> {
        &self.plain
    }

    pub fn dt_terms(&self) -> &BTreeMap<i32, Form> {
        &self.dt
    }

    pub fn plain_at(&self, w: i32) -> Form {
        self.plain.get(&w).cloned().unwrap_or_else(|| Form::zero(BASE, self.degree))
    }

    pub fn dt_at(&self, w: i32) -> Form {
        self.dt.get(&w).cloned().unwrap_or_else(|| Form::zero(BASE, self.degree - 1))
    }

    /// Drops terms whose coefficients are exactly zero.
    pub fn pruned(mut self) -> Self {
        self.plain.retain(|_, f| f.max_abs() != 0.0);
        self.dt.retain(|_, f| f.max_abs() != 0.0);
        self
    }

    /// `d(t^w α) = t^w dα + w t^{w−1} dt ∧ α` and `d(t^w dt ∧ β) = −t^w dt ∧ dβ`.
    pub fn d_cone(&self, alg: &CoframeAlgebra) -> ConeForm {
        let mut out = ConeForm::zero(self.degree + 1);
        for (&w, a) in &self.plain {
            if self.degree < BASE {
                out.add_plain(w, &alg.d(a));
            }
            if w != 0 {
                out.add_dt(w - 1, &(a * w as f64));
            }
        }
        for (&w, b) in &self.dt {
            if b.degree() < BASE {
                out.add_dt(w, &-&alg.d(b));
            }
        }
        out
    }

    /// Hodge star of `t²g ⊕ dt²` for a positive base metric `g` oriented by
    /// `g_orientation`, the cone oriented by `Vol_g ∧ dt`:
    /// `*(t^w α_k) = (−1)^k t^{w+6−2k} dt ∧ *α` and
    /// `*(t^w dt ∧ β_m) = t^{w+6−2m} *β`.
    pub fn hodge_cone(&self, g: &Metric) -> Result<ConeForm> {
        let mut out = ConeForm::zero(BASE + 1 - self.degree);
        for (&w, a) in &self.plain {
            let k = a.degree() as i32;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            out.add_dt(w + 6 - 2 * k, &(&g.hodge_star(a)? * sign));
        }
        for (&w, b) in &self.dt {
            let m = b.degree() as i32;
            out.add_plain(w + 6 - 2 * m, &g.hodge_star(b)?);
        }
        Ok(out)
    }

    /// The 7-dimensional form at the slice `t`, with `dt` as the last coordinate.
    pub fn eval_at(&self, t: f64) -> Form {
        let mut out = Form::zero(BASE + 1, self.degree);
        let dt = Form::monomial(BASE + 1, &[DT]);
        for (&w, a) in &self.plain {
            out += &(&a.extend(BASE + 1) * t.powi(w));
        }
        for (&w, b) in &self.dt {
            out += &(&dt.wedge(&b.extend(BASE + 1)).unwrap() * t.powi(w));
        }
        out
    }

    /// Coefficient norm summed over all weights.
    pub fn norm(&self) -> f64 {
        self.plain.values().chain(self.dt.values()).map(|f| f.norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &ConeForm) -> ConeForm {
        let mut out = self.clone();
        for (&w, a) in &other.plain {
            out.add_plain(w, &-a);
        }
        for (&w, b) in &other.dt {
            out.add_dt(w, &-b);
        }
        out
    }

    /// The common scaling weight under `t ↦ st`, counting `dt` as weight one,
    /// if every nonzero term shares it.
    pub fn homogeneous_weight(&self) -> Option<i32> {
        let mut weights = self
            .plain
            .iter()
            .filter(|(_, f)| f.max_abs() != 0.0)
            .map(|(&w, _)| w)
            .chain(self.dt.iter().filter(|(_, f)| f.max_abs() != 0.0).map(|(&w, _)| w + 1));
        let first = weights.next()?;
        weights.all(|w| w == first).then_some(first)
    }
}

/// `ρ_C = 3t² ω ∧ dt + t³ dω`, stored as `t³ dω + t² dt ∧ 3ω`.
pub fn cone_3form_from(omega: &Form, d_omega: &Form) -> ConeForm {
    let mut c = ConeForm::zero(3);
    c.add_plain(3, d_omega);
    // ω ∧ dt = dt ∧ ω for a 2-form
    c.add_dt(2, &(omega * 3.0));
    c
}

#[derive(Clone, Debug)]
pub struct ConeBuild {
    pub form: ConeForm,
    /// The structure rescaled to `λ = 1`: `ω' = λ²ω`, `Ω' = λ³Ω`.
    pub structure: SU3Structure,
    /// `λ²`.
    pub rescale: f64,
    /// Ratio between `ρ_C` and the cone form `t²ω∧dt + t³ℜΩ` it is a multiple of.
    pub global_factor: f64,
}

pub fn build_cone_3form(alg: &CoframeAlgebra, s: &SU3Structure) -> Result<ConeBuild> {
    let lam = s.lambda();
    if !(lam > 0.0) {
        return Err(GeometryError::NotNkShape("λ = 0 has no cone normalization".into()));
    }
    let rescale = lam * lam;
    let structure = s.rescaled(rescale)?;
    let w = structure.omega();
    let form = cone_3form_from(w, &alg.d(w));
    Ok(ConeBuild { form, structure, rescale, global_factor: 3.0 })
}

fn base_metric(s: &SU3Structure) -> Result<Metric> {
    Metric::new(s.j().associated_metric(s.omega()), s.j().orientation_sign())
}

#[derive(Clone, Debug)]
pub struct FernandezGrayReport {
    pub d_rho: f64,
    pub d_star_rho: f64,
    /// `|*ρ_C − ((3/2) t⁴ω² − 3t³ dt ∧ ℑΩ)|` in the `λ = 1` normalization.
    pub star_mismatch: f64,
    pub rescale: f64,
}

pub fn fernandez_gray_check(alg: &CoframeAlgebra, s: &SU3Structure) -> Result<FernandezGrayReport> {
    let built = build_cone_3form(alg, s)?;
    let st = &built.structure;
    let g = base_metric(st)?;
    let rho = &built.form;
    let star = rho.hodge_cone(&g)?;
    let mut expected = ConeForm::zero(4);
    expected.add_plain(4, &(&st.omega().wedge(st.omega()).unwrap() * 1.5));
    expected.add_dt(3, &(&st.big_omega().im() * -3.0));
    Ok(FernandezGrayReport {
        d_rho: rho.d_cone(alg).norm(),
        d_star_rho: star.d_cone(alg).norm(),
        star_mismatch: star.sub(&expected).norm(),
        rescale: built.rescale,
    })
}

#[derive(Clone, Debug)]
pub struct Stable3FormReport {
    /// `B(x, y) e^{1…7} = (1/6) ι_xφ ∧ ι_yφ ∧ φ`.
    pub b: DMatrix<f64>,
    pub definite: bool,
    /// `+1` if `B` is positive definite, `-1` if negative definite, else 0.
    pub sign: f64,
    /// `sign · B / |det B|^{1/9}` when `B` is definite.
    pub metric: Option<DMatrix<f64>>,
    /// Dimension of `{a ∈ gl(7) : a·φ = 0}`.
    pub stabilizer_dim: usize,
}

pub fn stability_check(phi: &Form) -> Result<Stable3FormReport> {
    if phi.dim() != 7 || phi.degree() != 3 {
        return Err(GeometryError::Invalid("stability is defined for 3-forms in dimension 7".into()));
    }
    let basis = |i: usize| {
        let mut v = vec![C64::new(0.0, 0.0); 7];
        v[i] = C64::new(1.0, 0.0);
        v
    };
    let contracted: Vec<Form> = (0..7).map(|i| phi.contract(&basis(i)).unwrap()).collect();
    let b = DMatrix::from_fn(7, 7, |x, y| {
        contracted[x].wedge(&contracted[y]).unwrap().wedge(phi).unwrap().density().re * STABLE_FORM_FACTOR
    });
    let b = (&b + b.transpose()) * 0.5;
    let eig = b.clone().symmetric_eigenvalues();
    let scale = eig.amax();
    let (lo, hi) = (eig.min(), eig.max());
    let sign = if scale == 0.0 {
        0.0
    } else if lo > TOL_STRUCTURE * scale {
        1.0
    } else if hi < -TOL_STRUCTURE * scale {
        -1.0
    } else {
        0.0
    };
    let definite = sign != 0.0;
    let metric = definite.then(|| &b * (sign / b.determinant().abs().powf(1.0 / 9.0)));
    // gl(7) acts on 1-forms by e^l ↦ e^l ∘ a; the images of E_{ab} span the action
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(98);
    for a in 0..7 {
        for bb in 0..7 {
            let images: Vec<Form> = (0..7)
                .map(|l| if l == a { Form::monomial(7, &[bb]) } else { Form::zero(7, 1) })
                .collect();
            cols.push(phi.derive(&images).coeffs().iter().map(|c| c.re).collect());
        }
    }
    let m = DMatrix::from_fn(35, 49, |r, c| cols[c][r]);
    let stabilizer_dim = 49 - linalg::rank(&m, TOL_STRUCTURE);
    Ok(Stable3FormReport { b, definite, sign, metric, stabilizer_dim })
}

/// The flat G2 form `e^{123} + e^{145} + e^{167} + e^{246} − e^{257} − e^{347} − e^{356}`.
pub fn flat_g2_form() -> Form {
    let terms: [(f64, [usize; 3]); 7] = [
        (1.0, [0, 1, 2]),
        (1.0, [0, 3, 4]),
        (1.0, [0, 5, 6]),
        (1.0, [1, 3, 5]),
        (-1.0, [1, 4, 6]),
        (-1.0, [2, 3, 6]),
        (-1.0, [2, 4, 5]),
    ];
    let mut f = Form::zero(7, 3);
    for (s, idx) in terms {
        f += &(&Form::monomial(7, &idx) * s);
    }
    f
}

#[derive(Clone, Debug)]
pub struct RoundtripReport {
    pub stability: Stable3FormReport,
    /// Mean componentwise ratio `g_φ / g_cone` at `t = 1`.
    pub ratio: Option<f64>,
    /// Relative spread of the componentwise ratio.
    pub spread: f64,
}

/// Compares the metric of `φ = ρ_C(t = 1)` with `g ⊕ dt²`.
pub fn roundtrip_cone(form: &ConeForm, base: &DMatrix<f64>) -> Result<RoundtripReport> {
    let stability = stability_check(&form.eval_at(1.0))?;
    let mut cone = DMatrix::zeros(7, 7);
    cone.view_mut((0, 0), (6, 6)).copy_from(base);
    cone[(6, 6)] = 1.0;
    let (ratio, spread) = match &stability.metric {
        Some(g) => match linalg::ratio_spread(g.as_slice(), cone.as_slice()) {
            Some((r, sp)) => (Some(r), sp),
            None => (None, f64::INFINITY),
        },
        None => (None, f64::INFINITY),
    };
    Ok(RoundtripReport { stability, ratio, spread })
}

pub fn metric_roundtrip(alg: &CoframeAlgebra, s: &SU3Structure) -> Result<RoundtripReport> {
    let built = build_cone_3form(alg, s)?;
    let st = &built.structure;
    roundtrip_cone(&built.form, &st.j().associated_metric(st.omega()))
}
