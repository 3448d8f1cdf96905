//! Connection pencils `(1/z) sum C_i dt_i + (1/z) sum F_a dy_a +
//! (U/z^2 + V/z + W/(z-1)) dz`, their flatness residuals, the potential
//! matrix, the reduced system and pairings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frobstruct::{check_ftype_axioms, FrobeniusTypeStructure};
use crate::report::{Report, ResidualReport};
use crate::series::json::vars_serde;
use crate::series::rational::{rat, sign_pow};
use crate::series::{vars, QMat, Rational, SeriesMatrix, Vars};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionPencil {
    pub tvars: Vec<String>,
    pub yvars: Vec<String>,
    pub c: Vec<SeriesMatrix>,
    pub f: Vec<SeriesMatrix>,
    pub u: SeriesMatrix,
    pub v: SeriesMatrix,
    pub w: SeriesMatrix,
}

impl ConnectionPencil {
    /// Validates shapes and that every matrix uses the variable list `t ++ y`.
    pub fn new(
        tvars: Vec<String>,
        yvars: Vec<String>,
        c: Vec<SeriesMatrix>,
        f: Vec<SeriesMatrix>,
        u: SeriesMatrix,
        v: SeriesMatrix,
        w: SeriesMatrix,
    ) -> Result<Self> {
        let p = ConnectionPencil {
            tvars,
            yvars,
            c,
            f,
            u,
            v,
            w,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.vars();
        let n = self.u.rows();
        if self.c.len() != self.tvars.len() || self.f.len() != self.yvars.len() {
            return Err(Error::Structural(format!(
                "{} C and {} F matrices for {} t and {} y variables",
                self.c.len(),
                self.f.len(),
                self.tvars.len(),
                self.yvars.len()
            )));
        }
        for (name, m) in self.named_matrices() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Structural(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
            if **m.vars() != *all {
                return Err(Error::Structural(format!(
                    "{name} uses variables {:?}, expected {:?}",
                    m.vars(),
                    all
                )));
            }
        }
        Ok(())
    }

    fn named_matrices(&self) -> Vec<(String, &SeriesMatrix)> {
        let mut v: Vec<(String, &SeriesMatrix)> = Vec::new();
        for (i, c) in self.c.iter().enumerate() {
            v.push((format!("C_{}", i + 1), c));
        }
        for (a, f) in self.f.iter().enumerate() {
            v.push((format!("F_{}", a + 1), f));
        }
        v.push(("U".into(), &self.u));
        v.push(("V".into(), &self.v));
        v.push(("W".into(), &self.w));
        v
    }

    /// Shared variable list `t ++ y`.
    pub fn vars(&self) -> Vars {
        self.u.vars().clone()
    }

    pub fn var_names(&self) -> Vec<String> {
        self.tvars.iter().chain(&self.yvars).cloned().collect()
    }

    pub fn rank(&self) -> usize {
        self.u.rows()
    }

    pub fn order(&self) -> i32 {
        self.named_matrices().iter().map(|(_, m)| m.order()).min().unwrap_or(0)
    }

    /// `C_1..C_m, F_1..F_l`, one matrix per base coordinate.
    pub fn higgs(&self) -> Vec<SeriesMatrix> {
        self.c.iter().chain(&self.f).cloned().collect()
    }

    /// Pencil over `t` only with constant `V` and zero `W`.
    pub fn over_t(c: Vec<SeriesMatrix>, u: SeriesMatrix, v: SeriesMatrix, w: SeriesMatrix) -> Result<Self> {
        let tv: Vec<String> = u.vars().as_ref().clone();
        Self::new(tv, Vec::new(), c, Vec::new(), u, v, w)
    }

    /// Restriction to `y = 0`, a pencil over `t` only.
    pub fn restrict_y_zero(&self) -> Result<Self> {
        let tv = vars(&self.tvars);
        let r = |m: &SeriesMatrix| m.restrict_to(&tv);
        Self::new(
            self.tvars.clone(),
            Vec::new(),
            self.c.iter().map(r).collect::<Result<Vec<_>>>()?,
            Vec::new(),
            r(&self.u)?,
            r(&self.v)?,
            r(&self.w)?,
        )
    }

    /// Truncates every matrix to total degree `n`.
    pub fn truncate(&self, n: i32) -> Self {
        let t = |m: &SeriesMatrix| m.truncate(n);
        ConnectionPencil {
            tvars: self.tvars.clone(),
            yvars: self.yvars.clone(),
            c: self.c.iter().map(t).collect(),
            f: self.f.iter().map(t).collect(),
            u: t(&self.u),
            v: t(&self.v),
            w: t(&self.w),
        }
    }
}

/// All fourteen flatness equations. Derivative equations are recorded as
/// right-hand side minus left-hand side.
pub fn flatness_residual(p: &ConnectionPencil) -> Result<ResidualReport> {
    p.validate()?;
    let m = p.tvars.len();
    let l = p.yvars.len();
    let mut r = ResidualReport::default();
    let ti = |i: usize| i;
    let ya = |a: usize| m + a;
    for i in 0..m {
        for j in (i + 1)..m {
            r.insert(
                format!("higgs_commute[{},{}]", i + 1, j + 1),
                p.c[i].commutator(&p.c[j])?,
            );
            r.insert(
                format!("c_closed[{},{}]", i + 1, j + 1),
                p.c[j].partial(ti(i)).sub(&p.c[i].partial(ti(j)))?,
            );
        }
    }
    for i in 0..m {
        for a in 0..l {
            r.insert(
                format!("higgs_f_commute[{},{}]", i + 1, a + 1),
                p.c[i].commutator(&p.f[a])?,
            );
            r.insert(
                format!("c_f_closed[{},{}]", i + 1, a + 1),
                p.f[a].partial(ti(i)).sub(&p.c[i].partial(ya(a)))?,
            );
        }
    }
    for a in 0..l {
        for b in (a + 1)..l {
            r.insert(format!("f_commute[{},{}]", a + 1, b + 1), p.f[a].commutator(&p.f[b])?);
            r.insert(
                format!("f_closed[{},{}]", a + 1, b + 1),
                p.f[b].partial(ya(a)).sub(&p.f[a].partial(ya(b)))?,
            );
        }
    }
    let groups: [(&str, &[SeriesMatrix], usize); 2] = [("t", &p.c, 0), ("y", &p.f, m)];
    for (tag, mats, offset) in groups {
        let commute_id = if tag == "t" { "c_u_commute" } else { "f_u_commute" };
        for (i, x) in mats.iter().enumerate() {
            let k = offset + i;
            r.insert(format!("{commute_id}[{}]", i + 1), x.commutator(&p.u)?);
            r.insert(
                format!("u_{tag}_derivative[{}]", i + 1),
                p.v.commutator(x)?.sub(x)?.sub(&p.u.partial(k))?,
            );
            let wx = p.w.commutator(x)?;
            r.insert(format!("w_{tag}_derivative[{}]", i + 1), wx.sub(&p.w.partial(k))?);
            r.insert(format!("v_{tag}_derivative[{}]", i + 1), wx.neg().sub(&p.v.partial(k))?);
        }
    }
    Ok(r)
}

/// Integrates `dX = sum_k D_k dx_k` over the variables at `positions`,
/// returning the part of `X` of positive degree in those variables.
pub(crate) fn euler_integrate(derivs: &[(usize, &SeriesMatrix)], vars: &Vars, n: usize) -> Result<SeriesMatrix> {
    let order = derivs.iter().map(|(_, d)| d.order() + 1).min().unwrap_or(0);
    let positions: Vec<usize> = derivs.iter().map(|(k, _)| *k).collect();
    let mut acc = SeriesMatrix::zeros(vars, order, n, n);
    for (k, d) in derivs {
        acc = acc.add(&d.mul_var(*k))?;
    }
    acc.divide_by_partial_degree(&positions)
}

/// The matrix `A` with `A(0) = 0`, `dA/dt_i = C_i` and `dA/dy_a = F_a`.
pub fn potential_matrix(p: &ConnectionPencil) -> Result<SeriesMatrix> {
    p.validate()?;
    let res = flatness_residual(p)?;
    for (k, m) in &res.residuals {
        let base = crate::report::base_id(k);
        if matches!(base, "c_closed" | "c_f_closed" | "f_closed") && !m.is_zero() {
            return Err(Error::Certification(format!("mixed partials differ: {k}")));
        }
    }
    let higgs = p.higgs();
    let derivs: Vec<(usize, &SeriesMatrix)> = higgs.iter().enumerate().collect();
    if derivs.is_empty() {
        return Ok(SeriesMatrix::zeros(&p.vars(), p.order() + 1, p.rank(), p.rank()));
    }
    euler_integrate(&derivs, &p.vars(), p.rank())
}

/// Findings of the reduced form of the flatness system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedSystemReport {
    /// `V + W` at the origin.
    #[serde(with = "crate::series::json::qmat_serde")]
    pub res_inf: QMat,
    /// `V + W` minus its constant term; zero when `V + W` is constant.
    pub res_inf_variation: SeriesMatrix,
    /// `U` minus its expression through `A`, `W`, `V + W` and `U(t, 0)`.
    pub u_formula: SeriesMatrix,
    /// The reduced sufficient equations, evaluated on the pencil rebuilt
    /// from `A`, `W`, `V + W` and `U(t, 0)`.
    pub reduced: ResidualReport,
}

impl ReducedSystemReport {
    pub fn passes(&self) -> bool {
        self.res_inf_variation.is_zero() && self.u_formula.is_zero() && self.reduced.all_zero()
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.require_zero("res_inf_constant", "V + W - (V + W)(0)", &self.res_inf_variation);
        r.require_zero("u_formula", "U formula residual", &self.u_formula);
        r.extend(self.reduced.to_report());
        r
    }
}

/// Value at `y = 0`, as a matrix over `t ++ y` again.
fn at_y_zero(m: &SeriesMatrix, p: &ConnectionPencil) -> Result<SeriesMatrix> {
    let tv = vars(&p.tvars);
    m.restrict_to(&tv)?.embed(&p.vars())
}

pub fn reduce_flatness(p: &ConnectionPencil) -> Result<ReducedSystemReport> {
    let a = potential_matrix(p)?;
    let all = p.vars();
    let order = p.order();
    let vw = p.v.add(&p.w)?;
    let res_inf = vw.eval_at_zero();
    let res = SeriesMatrix::from_qmat(&all, order, &res_inf);
    let res_inf_variation = vw.sub(&res)?;
    let da = a.sub(&at_y_zero(&a, p)?)?;
    let dw = p.w.sub(&at_y_zero(&p.w, p)?)?;
    let u0 = at_y_zero(&p.u, p)?;
    let u_rebuilt = u0.sub(&dw)?.add(&res.commutator(&da)?)?.sub(&da)?.truncate(order);
    let u_formula = p.u.sub(&u_rebuilt)?;

    let m = p.tvars.len();
    let c: Vec<SeriesMatrix> = (0..m).map(|i| a.partial(i)).collect();
    let f: Vec<SeriesMatrix> = (0..p.yvars.len()).map(|k| a.partial(m + k)).collect();
    let rebuilt = ConnectionPencil {
        tvars: p.tvars.clone(),
        yvars: p.yvars.clone(),
        c,
        f,
        u: u_rebuilt,
        v: res.sub(&p.w)?,
        w: p.w.clone(),
    };
    let full = flatness_residual(&rebuilt)?;
    let tv = vars(&p.tvars);
    let mut reduced = ResidualReport::default();
    for (k, r) in full.residuals {
        match crate::report::base_id(&k) {
            "higgs_f_commute" | "f_u_commute" | "w_y_derivative" => reduced.insert(k, r),
            "higgs_commute" | "c_u_commute" | "u_t_derivative" | "w_t_derivative" => {
                reduced.insert(format!("{k}@y=0"), r.restrict_to(&tv)?)
            }
            _ => {}
        }
    }
    Ok(ReducedSystemReport {
        res_inf,
        res_inf_variation,
        u_formula,
        reduced,
    })
}

/// Residue endomorphism and residual connection at a logarithmic pole.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueData {
    pub residue: SeriesMatrix,
    /// Connection matrices `Gamma_k` of `d + sum Gamma_k dx_k`.
    pub connection: Vec<SeriesMatrix>,
}

impl ResidueData {
    /// Residuals of `dR + [Gamma, R] = 0`, one per coordinate.
    pub fn flatness(&self) -> Result<Vec<SeriesMatrix>> {
        self.connection
            .iter()
            .enumerate()
            .map(|(k, g)| self.residue.partial(k).add(&g.commutator(&self.residue)?))
            .collect()
    }
}

/// At `z = infinity`: residue `-(V + W)`, trivial residual connection.
pub fn residue_at_infinity(p: &ConnectionPencil) -> Result<ResidueData> {
    let n = p.rank();
    let zero = SeriesMatrix::zeros(&p.vars(), p.order(), n, n);
    Ok(ResidueData {
        residue: p.v.add(&p.w)?.neg(),
        connection: vec![zero; p.tvars.len() + p.yvars.len()],
    })
}

/// At `z = 1`: residue `W`, residual connection `d + sum C_i dt_i + sum F_a dy_a`.
pub fn residue_at_one(p: &ConnectionPencil) -> ResidueData {
    ResidueData {
        residue: p.w.clone(),
        connection: p.higgs(),
    }
}

/// `z^{-w} R(z)` stored by its coefficients of `z^0..z^K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingMatrix {
    pub weight: i64,
    #[serde(with = "vars_serde")]
    pub vars: Vars,
    pub coeffs: Vec<SeriesMatrix>,
    /// True when all coefficients beyond the stored ones vanish.
    pub z_exact: bool,
}

impl PairingMatrix {
    pub fn constant(weight: i64, vars: &Vars, order: i32, g: &QMat) -> Self {
        PairingMatrix {
            weight,
            vars: vars.clone(),
            coeffs: vec![SeriesMatrix::from_qmat(vars, order, g)],
            z_exact: true,
        }
    }

    pub fn z_order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `z^{w+k}`; zero beyond the stored range when exact.
    pub fn coeff(&self, k: usize) -> Option<SeriesMatrix> {
        match self.coeffs.get(k) {
            Some(m) => Some(m.clone()),
            None if self.z_exact => {
                let c0 = &self.coeffs[0];
                Some(SeriesMatrix::zeros(&self.vars, c0.order(), c0.rows(), c0.cols()))
            }
            None => None,
        }
    }

    /// `R(-z)^T = (-1)^w R(z)`, i.e. `R_k^T = (-1)^k R_k`.
    pub fn symmetry_report(&self) -> Report {
        let mut rep = Report::new();
        for (k, r) in self.coeffs.iter().enumerate() {
            let d = r.transpose().sub(&r.scale(&sign_pow(k as i64)));
            match d {
                Ok(d) => rep.require_zero("pairing_symmetry", &format!("R_{k}^T - (-1)^{k} R_{k}"), &d),
                Err(e) => rep.push("pairing_symmetry", e.to_string()),
            }
        }
        match self.coeffs.first() {
            Some(r0) if r0.eval_at_zero().inverse().is_some() => {}
            _ => rep.push("pairing_nondegenerate", "constant coefficient is singular"),
        }
        rep
    }
}

/// `[z^j] z/(z-1) = -1` and `[z^j] z/(z+1) = (-1)^{j+1}` for `j >= 1`.
fn w_series_coeffs(j: usize) -> (Rational, Rational) {
    (Rational::from_integer((-1).into()), sign_pow(j as i64 + 1))
}

/// Residuals of the `z`-equation at the coefficients `z^{w+k}` for
/// `k = -1..K-1`, using coefficients up to `K`.
fn z_equation(
    p: &ConnectionPencil,
    coeffs: &[SeriesMatrix],
    w: i64,
    upto: usize,
) -> Result<Vec<(String, SeriesMatrix)>> {
    let mut out = Vec::new();
    let ut = p.u.transpose();
    let vt = p.v.transpose();
    let wt = p.w.transpose();
    let r0 = &coeffs[0];
    out.push(("z^(w-1)".to_string(), ut.mul(r0)?.sub(&r0.mul(&p.u)?)?));
    for k in 0..upto {
        if k + 1 >= coeffs.len() {
            break;
        }
        let rk = &coeffs[k];
        let r1 = &coeffs[k + 1];
        let mut rhs = ut.mul(r1)?.sub(&r1.mul(&p.u)?)?;
        rhs = rhs.add(&vt.mul(rk)?)?.add(&rk.mul(&p.v)?)?;
        for j in 1..=k {
            let (a, b) = w_series_coeffs(j);
            let rj = &coeffs[k - j];
            rhs = rhs.add(&wt.mul(rj)?.scale(&a))?.add(&rj.mul(&p.w)?.scale(&b))?;
        }
        let lhs = rk.scale(&Rational::from_integer((w + k as i64).into()));
        out.push((format!("z^(w+{k})"), rhs.sub(&lhs)?));
    }
    Ok(out)
}

/// Residuals of the derivative equation in direction `k` with matrix `x`:
/// the pole term `x^T R_0 - R_0 x` and `x^T R_{j+1} - R_{j+1} x - d_k R_j`.
fn direction_equation(x: &SeriesMatrix, k: usize, coeffs: &[SeriesMatrix], upto: usize) -> Result<Vec<SeriesMatrix>> {
    let xt = x.transpose();
    let mut out = vec![xt.mul(&coeffs[0])?.sub(&coeffs[0].mul(x)?)?];
    for j in 0..upto {
        if j + 1 >= coeffs.len() {
            break;
        }
        let r1 = &coeffs[j + 1];
        out.push(xt.mul(r1)?.sub(&r1.mul(x)?)?.sub(&coeffs[j].partial(k))?);
    }
    Ok(out)
}

/// Checks a pairing against a pencil through `z`-order `k`: the
/// `z`-equation, the `t` and `y` derivative equations, symmetry and
/// nondegeneracy.
pub fn pairing_residuals(p: &ConnectionPencil, r: &PairingMatrix, k: usize) -> Result<Report> {
    let mut rep = r.symmetry_report();
    let coeffs: Vec<SeriesMatrix> = (0..=k + 1).map_while(|j| r.coeff(j)).collect();
    rep.extend(pairing_residuals_with(p, &coeffs, r.weight, k)?);
    Ok(rep)
}

/// Result of extending a pairing from `y = 0` along the unfolding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingExtension {
    pub pairing: PairingMatrix,
    /// Coefficient of `z^{w-1}` produced by the extension; zero when the
    /// extension stays in `z^w` times holomorphic.
    pub pole_coefficient: SeriesMatrix,
    pub report: Report,
}

impl PairingExtension {
    pub fn certified(&self) -> bool {
        self.report.is_empty()
    }
}

/// Extends `R0` (over `t`) to the unfolded pencil by integrating the
/// `y`-equations coefficient by coefficient, then certifies the result
/// through `z`-order `k_order`.
pub fn pairing_extension_check(p: &ConnectionPencil, r0: &PairingMatrix, k_order: usize) -> Result<PairingExtension> {
    p.validate()?;
    let base = p.restrict_y_zero()?;
    let mut report = Report::new();
    let gc = crate::unfold::gc_check(&base, true);
    if !gc.spans() {
        report.push("gc", format!("generation fails: {}", gc.summary()));
    }
    let tv = vars(&p.tvars);
    if *r0.vars != *tv {
        return Err(Error::Structural(format!(
            "initial pairing uses variables {:?}, expected {:?}",
            r0.vars, tv
        )));
    }
    let base_rep = pairing_residuals(&base, r0, k_order)?;
    for v in base_rep.violations {
        report.push(&v.id, format!("at y = 0: {}", v.detail));
    }
    let n_order = p.order();
    let all = p.vars();
    let m = p.tvars.len();
    let l = p.yvars.len();
    let top = k_order + n_order.max(0) as usize;
    if !r0.z_exact && r0.coeffs.len() <= top {
        return Err(Error::Precondition(format!(
            "initial pairing needs {} z-coefficients, has {}",
            top + 1,
            r0.coeffs.len()
        )));
    }
    // coeffs[k] for k = 0..=top, each known to order n_order - max(0, k - k_order).
    let mut coeffs: Vec<SeriesMatrix> = vec![SeriesMatrix::zeros(&all, 0, p.rank(), p.rank()); top + 1];
    let mut above: Option<SeriesMatrix> = None;
    for k in (0..=top).rev() {
        let ord = n_order - (k as i32 - k_order as i32).max(0);
        let init = r0.coeff(k).expect("coefficient available").embed(&all)?.truncate(ord);
        let rk = match (&above, l) {
            (Some(r1), l) if l > 0 => {
                let mut derivs = Vec::new();
                for (a, x) in p.f.iter().enumerate() {
                    let d = x.transpose().mul(r1)?.sub(&r1.mul(x)?)?.truncate(ord - 1);
                    derivs.push((m + a, d));
                }
                let refs: Vec<(usize, &SeriesMatrix)> = derivs.iter().map(|(k, d)| (*k, d)).collect();
                let ypart = euler_integrate(&refs, &all, p.rank())?;
                init.add(&ypart)?.truncate(ord)
            }
            _ => init,
        };
        above = Some(rk.clone());
        coeffs[k] = rk;
    }
    // Coefficient of z^{w-1}.
    let pole_coefficient = if l > 0 {
        let mut derivs = Vec::new();
        for (a, x) in p.f.iter().enumerate() {
            let d = x
                .transpose()
                .mul(&coeffs[0])?
                .sub(&coeffs[0].mul(x)?)?
                .truncate(n_order - 1);
            derivs.push((m + a, d));
        }
        let refs: Vec<(usize, &SeriesMatrix)> = derivs.iter().map(|(k, d)| (*k, d)).collect();
        euler_integrate(&refs, &all, p.rank())?
    } else {
        SeriesMatrix::zeros(&all, n_order, p.rank(), p.rank())
    };
    if !pole_coefficient.is_zero() {
        report.require_zero("pole_term", "coefficient of z^(w-1)", &pole_coefficient);
    }
    let pairing = PairingMatrix {
        weight: r0.weight,
        vars: all.clone(),
        coeffs: coeffs.iter().take(k_order + 1).map(|c| c.truncate(n_order)).collect(),
        z_exact: false,
    };
    let mut full = pairing_residuals_with(p, &coeffs, r0.weight, k_order)?;
    full.extend(pairing.symmetry_report());
    for v in full.violations {
        if !report.mentions(&v.id) {
            report.push(&v.id, v.detail);
        }
    }
    Ok(PairingExtension {
        pairing,
        pole_coefficient,
        report,
    })
}

fn pairing_residuals_with(p: &ConnectionPencil, coeffs: &[SeriesMatrix], w: i64, k: usize) -> Result<Report> {
    let mut rep = Report::new();
    for (label, m) in z_equation(p, coeffs, w, k)? {
        rep.require_zero("pairing_z_equation", &label, &m);
    }
    let m = p.tvars.len();
    for (i, x) in p.higgs().iter().enumerate() {
        let id = if i < m {
            "pairing_t_equation"
        } else {
            "pairing_y_equation"
        };
        for (j, res) in direction_equation(x, i, coeffs, k)?.iter().enumerate() {
            let id = if j == 0 && i >= m { "pole_term" } else { id };
            let label = match j {
                0 => format!("direction {}: pole term", i + 1),
                _ => format!("direction {}: z^(w+{})", i + 1, j - 1),
            };
            rep.require_zero(id, &label, res);
        }
    }
    Ok(rep)
}

/// Structure connection of a Frobenius type structure: `C`, `U = 𝒰`,
/// `V = -𝒱 + (w/2) id`, `W = 0`, and the pairing `z^w g`.
pub fn structure_connection(f: &FrobeniusTypeStructure, w: i64) -> Result<(ConnectionPencil, PairingMatrix)> {
    let rep = check_ftype_axioms(f);
    if !rep.is_empty() {
        return Err(Error::Certification(format!("axioms fail: {:?}", rep.ids())));
    }
    let n = f.rank();
    let order = f.order();
    let tv = f.tvars.clone();
    let half = QMat::identity(n).scale(&rat(w, 2));
    let v = SeriesMatrix::from_qmat(&tv, order, &half.sub(&f.v));
    let pencil = ConnectionPencil::new(
        tv.as_ref().clone(),
        Vec::new(),
        f.c.clone(),
        Vec::new(),
        f.u.clone(),
        v,
        SeriesMatrix::zeros(&tv, order, n, n),
    )?;
    let res = flatness_residual(&pencil)?;
    if !res.all_zero() {
        return Err(Error::Certification(format!(
            "structure connection is not flat: {:?}",
            res.nonzero()
        )));
    }
    Ok((pencil, PairingMatrix::constant(w, &tv, order, &f.g)))
}

/// Reads a Frobenius type structure back from a structure connection. All
/// pencil coordinates become base coordinates.
pub fn ftype_from_structure_connection(p: &ConnectionPencil, r: &PairingMatrix) -> Result<FrobeniusTypeStructure> {
    p.validate()?;
    if !p.w.is_zero() {
        return Err(Error::Precondition("structure connections have W = 0".into()));
    }
    if !p.v.is_constant() {
        return Err(Error::Precondition("V is not constant".into()));
    }
    if r.coeffs.iter().skip(1).any(|c| !c.is_zero()) || !r.coeffs[0].is_constant() {
        return Err(Error::Precondition("pairing is not z^w times a constant".into()));
    }
    let n = p.rank();
    let w = r.weight;
    let half = QMat::identity(n).scale(&rat(w, 2));
    let vv = half.sub(&p.v.eval_at_zero());
    FrobeniusTypeStructure::new(p.vars(), p.higgs(), p.u.clone(), vv, r.coeffs[0].eval_at_zero())
}
