//! The consolidated verification suite behind `bperm suite`.
//!
//! Every group returns named [`Check`]s; the suite passes iff all of them do.
//! Checks that expect a failure (negative controls, strong-condition
//! collapses) pass when the expected failure is observed.

use std::time::Instant;

use serde::Serialize;

use crate::coaction::{self, AveragingReport};
use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat};
use crate::models::{BuiltModel, ModelKind, ModelSpec};
use crate::ncpoly::{self, Word};
use crate::partitions;
use crate::probspace::{self, UnitalizedElement};
use crate::report::{all_pass, Check, Verdict};
use crate::semigroup::{self, SemigroupRep};

/// A fault injected into one builtin component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corruption {
    StandardRep,
    AveragingRep,
    Model(ModelKind),
}

impl Corruption {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "standard" | "rep" => Some(Corruption::StandardRep),
            "averaging" => Some(Corruption::AveragingRep),
            other => ModelKind::parse(other)
                .filter(|k| *k != ModelKind::Custom)
                .map(Corruption::Model),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub full: bool,
    pub max_n: usize,
    pub max_degree: usize,
    pub tolerance: f64,
    pub corrupt: Vec<Corruption>,
}

impl SuiteConfig {
    pub fn quick() -> Self {
        SuiteConfig {
            full: false,
            max_n: 3,
            max_degree: 4,
            tolerance: 1e-10,
            corrupt: Vec::new(),
        }
    }

    pub fn full() -> Self {
        SuiteConfig {
            full: true,
            max_n: 4,
            max_degree: 5,
            ..SuiteConfig::quick()
        }
    }
}

/// One group of checks, with its wall-clock time.
#[derive(Clone, Debug, Serialize)]
pub struct Group {
    pub name: String,
    pub seconds: f64,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub groups: Vec<Group>,
    pub verdict: Verdict,
}

impl SuiteReport {
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.groups.iter().flat_map(|g| g.checks.iter())
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks().filter(|c| !c.verdict.passed())
    }

    pub fn group(&self, name: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.name == name)
    }
}

/// `u[1][1]` scaled by 0.9, which is no longer idempotent.
pub fn corrupt_standard(rep: SemigroupRep) -> Result<SemigroupRep> {
    let bad = rep.u(1, 1).mapv(|z| z * real(0.9));
    rep.with_generator(1, 1, bad)
}

/// The first averaged diagonal generator scaled by 0.9.
pub fn corrupt_averaging(rep: SemigroupRep, frozen: usize) -> Result<SemigroupRep> {
    let i = frozen + 1;
    let bad = rep.u(i, i).mapv(|z| z * real(0.9));
    rep.with_generator(i, i, bad)
}

/// Perturb one variable so the property the model exemplifies breaks.
pub fn corrupt_model(mut built: BuiltModel, kind: ModelKind) -> Result<BuiltModel> {
    let m = &built.model;
    let n = m.n();
    let dim = m.dim();
    let e0 = linalg::line_projection(&linalg::basis_vector(dim, 0));
    let (index, replacement) = match kind {
        // x_1 stops being distributed like the others
        ModelKind::ShiftNonunital | ModelKind::ShiftUnital => {
            (1, m.x(1)? + &e0.mapv(|z| z * real(0.25)))
        }
        ModelKind::Constant => (n.min(2), m.x(1)?.mapv(|z| z * real(0.5))),
        ModelKind::Zero => (1, e0),
        ModelKind::ClassicalIid => (n.min(2), linalg::zeros(dim)),
        ModelKind::Custom => return Ok(built),
    };
    built.model = m.with_variable(index, replacement)?;
    Ok(built)
}

/// Factories that apply the configured corruption.
struct Zoo<'a> {
    cfg: &'a SuiteConfig,
}

impl Zoo<'_> {
    fn corrupted(&self, c: Corruption) -> bool {
        self.cfg.corrupt.contains(&c)
    }

    fn standard(&self, n: usize) -> Result<SemigroupRep> {
        let rep = semigroup::build_standard_rep(n)?;
        if self.corrupted(Corruption::StandardRep) {
            return corrupt_standard(rep);
        }
        Ok(rep)
    }

    fn averaging(&self, frozen: usize, m: usize) -> Result<SemigroupRep> {
        let rep = semigroup::build_averaging_rep(frozen, m)?;
        if self.corrupted(Corruption::AveragingRep) {
            return corrupt_averaging(rep, frozen);
        }
        Ok(rep)
    }

    fn model(&self, kind: ModelKind, n: usize, max_len: usize) -> Result<BuiltModel> {
        let built = ModelSpec::builtin(kind, n, None).build(max_len)?;
        if self.corrupted(Corruption::Model(kind)) {
            return corrupt_model(built, kind);
        }
        Ok(built)
    }
}

fn group(name: &str, f: impl FnOnce() -> Result<Vec<Check>>) -> Result<Group> {
    let start = Instant::now();
    let checks = f()?;
    Ok(Group {
        name: name.into(),
        seconds: start.elapsed().as_secs_f64(),
        verdict: all_pass(&checks),
        checks,
    })
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let zoo = Zoo { cfg };
    let groups = vec![
        group("semigroup-relations", || relations_group(&zoo))?,
        group("vanishing", || vanishing_group(&zoo))?,
        group("boolean-implies-invariance", || linear_group(&zoo))?,
        group("boolean-factorization", || {
            factorization_moments_group(&zoo)
        })?,
        group("moment-reduction", || moment_reduction_group(&zoo))?,
        group("factorization-property", || {
            factorization_property_group(&zoo)
        })?,
        group("unitalization", || unitalization_group(&zoo))?,
        group("strong-conditions", || strong_conditions_group(&zoo))?,
        group("negative-controls", || negative_controls_group(&zoo))?,
        group("combinatorics", || combinatorics_group(cfg))?,
    ];
    let verdict = Verdict::from_bool(groups.iter().all(|g| g.verdict.passed()));
    Ok(SuiteReport { groups, verdict })
}

fn relations_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in 2..=8 {
        let rep = zoo.standard(n)?;
        let r = semigroup::check_relations(&rep, 1e-12);
        checks.extend(
            r.checks
                .into_iter()
                .map(|c| c.prefixed(&format!("standard(n={n})"))),
        );
    }
    let rep = zoo.standard(3)?;
    let corner = semigroup::u_product(&rep, &[1], &[1])?;
    let third = rep.projection().mapv(|z| z / real(3.0));
    checks.push(Check::new(
        "standard(n=3).corner_u11",
        linalg::max_abs_diff(&corner, &third),
        1e-12,
    ));
    for n in 2..=zoo.cfg.max_n {
        let rep = zoo.standard(n)?;
        let r = semigroup::comultiplication_check(&rep, 1e-10);
        checks.extend(
            r.checks
                .into_iter()
                .map(|c| c.prefixed(&format!("standard(n={n})"))),
        );
    }
    Ok(checks)
}

fn vanishing_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    let max_len = zoo.cfg.max_degree;
    let mut checks = Vec::new();
    for n in 2..=zoo.cfg.max_n {
        let rep = zoo.standard(n)?;
        let r = semigroup::vanishing_sweep(&rep, max_len, 1e-12);
        let mut c = Check::new(
            format!("vanishing.standard(n={n},k<={max_len})"),
            r.max_nonequivalent_residual,
            1e-12,
        );
        if let Some(w) = r.witness {
            c = c.with_witness(w);
        }
        checks.push(c);
    }
    Ok(checks)
}

const SHIFTS: [ModelKind; 2] = [ModelKind::ShiftNonunital, ModelKind::ShiftUnital];

fn linear_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    let d = zoo.cfg.max_degree;
    let mut checks = Vec::new();
    for kind in SHIFTS {
        for n in 2..=zoo.cfg.max_n {
            let built = zoo.model(kind, n, d)?;
            let rep = zoo.standard(n)?;
            let r = coaction::linear_invariance_check(&built.model, &rep, d, zoo.cfg.tolerance)?;
            checks.push(r.to_check().prefixed(&format!("{}(n={n})", kind.name())));
        }
    }
    Ok(checks)
}

fn factorization_moments_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    const MAX_LEN: usize = 6;
    let mut checks = Vec::new();
    for kind in SHIFTS {
        let n = zoo.cfg.max_n;
        let built = zoo.model(kind, n, MAX_LEN)?;
        let m = &built.model;
        let e = built
            .expectation
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("shift model without E".into()))?;
        let moments = m.single_variable_moments(1, MAX_LEN)?;
        let mut worst = 0.0f64;
        let mut witness: Option<Word> = None;
        for w in ncpoly::words_up_to_degree(n, MAX_LEN)
            .into_iter()
            .filter(|w| !w.is_empty())
        {
            let predicted = match kind {
                ModelKind::ShiftNonunital => probspace::boolean_predicted_moment(&moments, &w)?,
                _ => probspace::boolean_predicted_operator_moment(m, e, &w)?,
            };
            let r = (m.moment(&w)? - predicted).norm();
            if r > worst || (r.is_nan() && !worst.is_nan()) {
                worst = r;
                witness = Some(w);
            }
        }
        let mut c = Check::new(
            format!("{}(n={n}).boolean_moments(len<={MAX_LEN})", kind.name()),
            worst,
            1e-12,
        );
        if let Some(w) = witness {
            c = c.with_witness(w);
        }
        checks.push(c);
    }
    Ok(checks)
}

fn moment_reduction_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    let tol = zoo.cfg.tolerance;
    let mut checks = Vec::new();
    for kind in SHIFTS {
        let built = zoo.model(kind, 3, 9)?;
        let r = probspace::check_moment_reduction(&built.model, 3, 3, tol)?;
        checks.push(r.to_check().prefixed(&format!("{}(n=3)", kind.name())));
    }

    const FROZEN: usize = 1;
    const SIZES: [usize; 4] = [4, 8, 16, 32];
    for m in SIZES {
        let rep = zoo.averaging(FROZEN, m)?;
        let r = semigroup::check_relations(&rep, 1e-10);
        checks.extend(
            r.checks
                .into_iter()
                .map(|c| c.prefixed(&format!("averaging(N={FROZEN},M={m})"))),
        );
    }
    let mut words: Vec<Vec<usize>> = vec![vec![2, 2, 1, 1, 2, 2], vec![1, 2, 1]];
    if zoo.cfg.full {
        words.push(vec![2, 2, 1, 1, 2, 2, 1, 1, 2, 2]);
    }
    let n = FROZEN + SIZES[SIZES.len() - 1];
    let longest = words.iter().map(Vec::len).max().unwrap_or(0);
    let built = zoo.model(ModelKind::ShiftNonunital, n, longest)?;
    for w in &words {
        let report = averaging_with(zoo, &built, FROZEN, &SIZES, w, tol)?;
        checks.extend(report.checks());
    }
    Ok(checks)
}

fn averaging_with(
    zoo: &Zoo<'_>,
    built: &BuiltModel,
    frozen: usize,
    sizes: &[usize],
    word: &[usize],
    tol: f64,
) -> Result<AveragingReport> {
    coaction::averaging_experiment_with(&built.model, frozen, sizes, word, tol, |m| {
        zoo.averaging(frozen, m)
    })
}

fn factorization_property_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for kind in SHIFTS {
        for n in 2..=zoo.cfg.max_n {
            let built = zoo.model(kind, n, 4)?;
            let r = probspace::check_factorization_property(
                &built.model,
                built.expectation.as_ref(),
                4,
                zoo.cfg.tolerance,
            )?;
            checks.push(r.to_check().prefixed(&format!("{}(n={n})", kind.name())));
        }
    }
    Ok(checks)
}

fn unitalization_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for kind in SHIFTS {
        for n in 2..=zoo.cfg.max_n {
            let built = zoo.model(kind, n, 4)?;
            let r = probspace::check_boolean_implies_free(
                &built.model,
                built.expectation.as_ref(),
                4,
                zoo.cfg.tolerance,
            )?;
            checks.push(r.to_check().prefixed(&format!("{}(n={n})", kind.name())));
        }
        let built = zoo.model(kind, 2, 3)?;
        let m = &built.model;
        let e = built
            .expectation
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("shift model without E".into()))?;
        let dim = m.dim();
        let one = UnitalizedElement::new(linalg::ONE, linalg::zeros(dim));
        let mut unit_residual = one.lift(e).distance(&one);
        let mut body_residual = 0.0f64;
        for w in ncpoly::words_up_to_degree(2, 3) {
            let a: CMat = m.evaluate(&w)?;
            let lifted = UnitalizedElement::new(linalg::ZERO, a.clone()).lift(e);
            body_residual = body_residual
                .max(lifted.distance(&UnitalizedElement::new(linalg::ZERO, e.apply(&a))));
            // the scalar slot passes through untouched
            let mixed = UnitalizedElement::new(real(2.0), a).lift(e);
            unit_residual = unit_residual.max((mixed.scalar - real(2.0)).norm());
        }
        checks.push(Check::new(
            format!("{}.lift_unit", kind.name()),
            unit_residual,
            0.0,
        ));
        checks.push(Check::new(
            format!("{}.lift_body", kind.name()),
            body_residual,
            0.0,
        ));
    }
    Ok(checks)
}

fn strong_conditions_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    let tol = zoo.cfg.tolerance;
    let mut checks = Vec::new();

    let constant = zoo.model(ModelKind::Constant, 3, 4)?;
    let rep = zoo.standard(3)?;
    let r = coaction::algebraic_invariance_check(&constant.model, &rep, 4, tol)?;
    checks.push(r.to_check().prefixed("constant(n=3)"));

    let shift = zoo.model(ModelKind::ShiftNonunital, 3, 2)?;
    let r = coaction::algebraic_invariance_check(&shift.model, &rep, 2, tol)?;
    let mut c = Check::with_verdict(
        "shift-nonunital(n=3).algebraic_fails",
        r.max_residual,
        0.1,
        !r.verdict.passed() && r.max_residual >= 0.1,
    );
    if let Some(w) = &r.worst_word {
        c = c.with_witness(w);
    }
    checks.push(c);

    let zero = zoo.model(ModelKind::Zero, 2, 4)?;
    let r = coaction::bsn_invariance_check(&zero.model, 4, tol)?;
    checks.push(r.to_check().prefixed("zero(n=2)"));

    for kind in [
        ModelKind::ShiftNonunital,
        ModelKind::ShiftUnital,
        ModelKind::Constant,
        ModelKind::ClassicalIid,
    ] {
        let built = zoo.model(kind, 2, 2)?;
        let second = built.model.moment_of(&[1, 1])?.norm();
        if second < 0.5 {
            continue;
        }
        let r = coaction::bsn_invariance_check(&built.model, 2, tol)?;
        let mut c = Check::with_verdict(
            format!("{}(n=2).bsn_fails", kind.name()),
            r.max_residual,
            0.5,
            !r.verdict.passed() && r.max_residual >= 0.5,
        );
        if let Some(w) = &r.worst_word {
            c = c.with_witness(w);
        }
        checks.push(c);
    }
    Ok(checks)
}

fn negative_controls_group(zoo: &Zoo<'_>) -> Result<Vec<Check>> {
    let tol = zoo.cfg.tolerance;
    let built = zoo.model(ModelKind::ClassicalIid, 2, 4)?;
    let r = probspace::check_boolean_independence(&built.model, None, 4, tol)?;
    let witness_len = r.witness.as_ref().map_or(0, Vec::len);
    let mut boolean = Check::with_verdict(
        "classical-iid(n=2).boolean_fails",
        r.residual,
        tol,
        !r.verdict.passed() && witness_len == 4,
    );
    if let Some(w) = &r.witness {
        boolean = boolean.with_witness(w);
    }

    let rep = zoo.standard(2)?;
    let r = coaction::linear_invariance_check(&built.model, &rep, 4, tol)?;
    let mut linear = Check::with_verdict(
        "classical-iid(n=2).linear_fails",
        r.max_residual,
        1e-6,
        r.max_residual > 1e-6,
    );
    if let Some(w) = &r.worst_word {
        linear = linear.with_witness(w);
    }
    Ok(vec![boolean, linear])
}

fn combinatorics_group(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut count_errors = 0usize;
    let top = if cfg.full { 12 } else { 10 };
    for k in 1..=top {
        if partitions::enumerate_interval_partitions(k)?.len() != 1 << (k - 1) {
            count_errors += 1;
        }
    }
    let mut unique_errors = 0usize;
    for k in 1..=6 {
        let parts = partitions::enumerate_interval_partitions(k)?;
        for n in 1..=3 {
            for w in ncpoly::words_of_length(n, k) {
                let seq = w.letters();
                let compat: Vec<_> = parts
                    .iter()
                    .filter(|p| partitions::compatible(seq, p).unwrap_or(false))
                    .collect();
                let canonical = partitions::canonical_partition(seq)?;
                if compat.len() != 1 || *compat[0] != canonical {
                    unique_errors += 1;
                }
            }
        }
    }
    Ok(vec![
        Check::new(
            format!("interval_partition_count(k<={top})"),
            count_errors as f64,
            0.0,
        ),
        Check::new(
            "compatible_partition_unique(k<=6,n<=3)",
            unique_errors as f64,
            0.0,
        ),
    ])
}
