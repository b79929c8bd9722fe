//! Scenario harness: declarative chart/alternative/mean-shift grids that
//! reproduce whole ARL tables.
//!
//! A [`Scenario`] bundles an in-control model, a list of chart designs with
//! their control limits, a list of out-of-control alternatives given by
//! `(family, dispersion index)`, and the mean shifts to sweep. Running it
//! produces one ARL estimate per cell. [`builtin_scenarios`] ships the
//! standard grids for binomial, negative-binomial, and Poisson in-control
//! models (i.i.d. and AR(1) with rho = 0.5, means 2 and 5) plus the
//! Poi-INAR(1) design set with mean 2.1 and rho 0.78.

use crate::chart::{ChartDesign, LimitSpec, WeightFunction};
use crate::dist::{CountDistribution, FamilyKind};
use crate::error::Result;
use crate::process::{ProcessModel, ScenarioDgp, Stationary};
use crate::rng::derive_seed;
use crate::runlength::{estimate_arl, ArlConfig, ArlEstimate};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Weight choice inside a scenario; `ShiftedPmf` resolves against the
/// scenario's in-control distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Linear,
    Root,
    Inverse,
    ShiftedPmf,
}

impl WeightKind {
    fn build(self, in_control: &CountDistribution) -> WeightFunction {
        match self {
            WeightKind::Linear => WeightFunction::Linear,
            WeightKind::Root => WeightFunction::Root,
            WeightKind::Inverse => WeightFunction::Inverse,
            WeightKind::ShiftedPmf => WeightFunction::shifted_pmf(in_control.clone()),
        }
    }
}

/// One chart column of a scenario.
#[derive(Clone, Debug)]
pub struct ChartSpec {
    pub label: String,
    pub kind: ChartSpecKind,
    pub lambda: f64,
    pub limit: ChartLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartSpecKind {
    Shewhart,
    Ewma,
    Stein(WeightKind),
}

#[derive(Clone, Copy, Debug)]
pub enum ChartLimit {
    HalfWidth(f64),
    Explicit { lcl: f64, ucl: f64 },
}

impl ChartSpec {
    fn ewma(l: f64) -> Self {
        Self {
            label: "ewma".into(),
            kind: ChartSpecKind::Ewma,
            lambda: 0.1,
            limit: ChartLimit::HalfWidth(l),
        }
    }

    fn stein(weight: WeightKind, l: f64) -> Self {
        let label = match weight {
            WeightKind::Linear => "stein-linear",
            WeightKind::Root => "stein-root",
            WeightKind::Inverse => "stein-inverse",
            WeightKind::ShiftedPmf => "stein-shifted-pmf",
        };
        Self {
            label: label.into(),
            kind: ChartSpecKind::Stein(weight),
            lambda: 0.1,
            limit: ChartLimit::HalfWidth(l),
        }
    }

    fn c_chart(lcl: f64, ucl: f64) -> Self {
        Self {
            label: "c-chart".into(),
            kind: ChartSpecKind::Shewhart,
            lambda: 1.0,
            limit: ChartLimit::Explicit { lcl, ucl },
        }
    }
}

/// One out-of-control family row of a scenario.
#[derive(Clone, Debug)]
pub struct AlternativeSpec {
    pub label: String,
    pub family: FamilyKind,
    pub dispersion: f64,
}

impl AlternativeSpec {
    fn new(label: &str, family: FamilyKind, dispersion: f64) -> Self {
        Self {
            label: label.into(),
            family,
            dispersion,
        }
    }
}

/// A full chart/alternative/mean-shift grid.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    pub mu0: f64,
    pub rho: f64,
    pub n: Option<u64>,
    pub in_control_family: FamilyKind,
    pub in_control_dispersion: f64,
    pub charts: Vec<ChartSpec>,
    pub alternatives: Vec<AlternativeSpec>,
    pub shifts: Vec<f64>,
    pub replications: usize,
    pub cap: u64,
    pub seed: u64,
}

/// One evaluated grid cell.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub scenario_id: String,
    /// `chart|alternative|shift`, e.g. `stein-linear|BB|+0.00`.
    pub cell: String,
    pub chart: String,
    pub alt: String,
    pub shift: f64,
    pub mu: f64,
    /// True for the unshifted in-control model.
    pub in_control: bool,
    /// True when the alternative's AR(1) construction involves a modeling
    /// convention (ZIP/Good innovations, BB/ZIB thinnings) rather than an
    /// exact stationary marginal.
    pub approximate: bool,
    pub estimate: ArlEstimate,
}

impl Scenario {
    pub fn in_control_dist(&self) -> Result<CountDistribution> {
        CountDistribution::from_mean_dispersion(
            self.in_control_family,
            self.mu0,
            self.in_control_dispersion,
            self.n,
        )
    }

    pub fn build_chart(&self, spec: &ChartSpec) -> Result<ChartDesign> {
        let in_control = self.in_control_dist()?;
        let limits = match spec.limit {
            ChartLimit::HalfWidth(l) => LimitSpec::Symmetric(l),
            ChartLimit::Explicit { lcl, ucl } => LimitSpec::Explicit { lcl, ucl },
        };
        match spec.kind {
            ChartSpecKind::Shewhart => ChartDesign::shewhart(in_control, limits),
            ChartSpecKind::Ewma => ChartDesign::ewma(in_control, spec.lambda, limits),
            ChartSpecKind::Stein(weight) => {
                let w = weight.build(&in_control);
                ChartDesign::stein(in_control, w, spec.lambda, limits)
            }
        }
    }

    /// In-control process model of the scenario.
    pub fn in_control_model(&self) -> Result<ProcessModel> {
        ProcessModel::from_marginal(
            self.in_control_family,
            self.mu0,
            self.in_control_dispersion,
            self.n,
            self.rho,
        )
    }

    /// Resolves one cell into a runnable (design, data-generating process).
    pub fn resolve_cell(
        &self,
        chart: &ChartSpec,
        alt: &AlternativeSpec,
        shift: f64,
    ) -> Result<ResolvedCell> {
        let design = self.build_chart(chart)?;
        let in_control = self.in_control_model()?;
        let is_in_control = alt.family == self.in_control_family
            && (alt.dispersion - self.in_control_dispersion).abs() < 1e-12
            && shift == 0.0;
        let (dgp, approximate) = if is_in_control {
            (ScenarioDgp::in_control(in_control), false)
        } else {
            let ooc = ProcessModel::from_marginal(
                alt.family,
                self.mu0 + shift,
                alt.dispersion,
                self.n,
                self.rho,
            )?;
            let approximate = !has_exact_marginal(&ooc);
            (ScenarioDgp::with_change(in_control, ooc, 1)?, approximate)
        };
        Ok(ResolvedCell {
            design,
            dgp,
            in_control: is_in_control,
            approximate,
        })
    }

    /// Runs every cell of the grid concurrently; output order is fixed by
    /// the (chart, alternative, shift) nesting.
    pub fn run(&self) -> Result<Vec<CellResult>> {
        let mut jobs = Vec::new();
        for chart in &self.charts {
            for alt in &self.alternatives {
                for &shift in &self.shifts {
                    jobs.push((chart.clone(), alt.clone(), shift));
                }
            }
        }
        jobs.par_iter()
            .map(|(chart, alt, shift)| self.run_cell(chart, alt, *shift))
            .collect()
    }

    /// Runs a single cell.
    pub fn run_cell(
        &self,
        chart: &ChartSpec,
        alt: &AlternativeSpec,
        shift: f64,
    ) -> Result<CellResult> {
        let cell = format!("{}|{}|{:+.2}", chart.label, alt.label, shift);
        let resolved = self.resolve_cell(chart, alt, shift)?;
        let estimate = estimate_arl(
            &resolved.design,
            &resolved.dgp,
            &ArlConfig {
                replications: self.replications,
                cap: self.cap,
                seed: derive_seed(self.seed, &format!("{}/{}", self.id, cell)),
            },
        )?;
        Ok(CellResult {
            scenario_id: self.id.clone(),
            cell,
            chart: chart.label.clone(),
            alt: alt.label.clone(),
            shift,
            mu: self.mu0 + shift,
            in_control: resolved.in_control,
            approximate: resolved.approximate,
            estimate,
        })
    }
}

/// A cell resolved into its design and data-generating process.
#[derive(Clone, Debug)]
pub struct ResolvedCell {
    pub design: ChartDesign,
    pub dgp: ScenarioDgp,
    pub in_control: bool,
    pub approximate: bool,
}

fn has_exact_marginal(model: &ProcessModel) -> bool {
    !matches!(
        model,
        ProcessModel::BbAr1 { .. }
            | ProcessModel::ZibAr1 { .. }
            | ProcessModel::BinThinInar1 {
                stationary: Stationary::BurnIn(_),
                ..
            }
    )
}

/// CSV rendering with the fixed header
/// `scenario_id,cell,mu,alt_family,arl,se,censored`.
pub fn to_csv(rows: &[CellResult]) -> String {
    let mut out = String::from("scenario_id,cell,mu,alt_family,arl,se,censored\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.2},{},{:.4},{:.4},{}",
            r.scenario_id, r.cell, r.mu, r.alt, r.estimate.arl, r.estimate.se, r.estimate.censored
        );
    }
    out
}

/// Human-readable aligned table, one block per chart. The unshifted
/// in-control cell is starred; censored estimates are prefixed with `>`;
/// rows whose AR(1) construction is approximate are marked `~`.
pub fn to_text(scenario: &Scenario, rows: &[CellResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {} - {} (mu0 = {}, rho = {}, R = {}, cap = {}, seed = {})",
        scenario.id,
        scenario.description,
        scenario.mu0,
        scenario.rho,
        scenario.replications,
        scenario.cap,
        scenario.seed
    );
    let mut any_approx = false;
    let mut any_censored = false;
    for chart in &scenario.charts {
        let limit = match chart.limit {
            ChartLimit::HalfWidth(l) => format!("L = {l}"),
            ChartLimit::Explicit { lcl, ucl } => format!("LCL = {lcl}, UCL = {ucl}"),
        };
        let _ = writeln!(out, "\n  {} ({limit})", chart.label);
        let mut header = format!("    {:<10}", "alt");
        for &shift in &scenario.shifts {
            header.push_str(&format!("{:>14}", format!("mu0{shift:+.2}")));
        }
        let _ = writeln!(out, "{header}");
        for alt in &scenario.alternatives {
            let mut line = format!("    {:<10}", alt.label);
            for &shift in &scenario.shifts {
                let row = rows
                    .iter()
                    .find(|r| r.chart == chart.label && r.alt == alt.label && r.shift == shift);
                match row {
                    Some(r) => {
                        let mut cellstr = format!("{:.1}", r.estimate.arl);
                        if r.estimate.censored > 0 {
                            cellstr = format!(">{cellstr}");
                            any_censored = true;
                        }
                        if r.in_control {
                            cellstr.push('*');
                        }
                        if r.approximate {
                            cellstr.push('~');
                            any_approx = true;
                        }
                        line.push_str(&format!("{cellstr:>14}"));
                    }
                    None => line.push_str(&format!("{:>14}", "-")),
                }
            }
            let _ = writeln!(out, "{line}");
        }
    }
    let _ = writeln!(out, "\n  * in-control cell");
    if any_censored {
        let _ = writeln!(
            out,
            "  > lower bound: some replications were censored at the cap"
        );
    }
    if any_approx {
        let _ = writeln!(
            out,
            "  ~ approximate reproduction: the AR(1) construction for this \
             alternative fixes the marginal mean and dispersion but its \
             stationary law has no closed form"
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Built-in scenario set.

#[allow(clippy::too_many_arguments)]
fn grid(
    id: &str,
    description: &str,
    in_control_family: FamilyKind,
    in_control_dispersion: f64,
    n: Option<u64>,
    mu0: f64,
    rho: f64,
    charts: Vec<ChartSpec>,
    alternatives: Vec<AlternativeSpec>,
) -> Scenario {
    Scenario {
        id: id.into(),
        description: description.into(),
        mu0,
        rho,
        n,
        in_control_family,
        in_control_dispersion,
        charts,
        alternatives,
        shifts: vec![-0.25, 0.0, 0.25],
        replications: 10_000,
        cap: 100_000,
        seed: 1,
    }
}

/// The built-in scenario grids with their published control limits.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();

    // Binomial in-control counts, n = 10; ZIB and BB alternatives at
    // I_B = 5/3. EWMA plus Stein charts with linear and root weights.
    let bin_alts = || {
        vec![
            AlternativeSpec::new("ZIB", FamilyKind::ZiBinomial, 5.0 / 3.0),
            AlternativeSpec::new("Bin", FamilyKind::Binomial, 1.0),
            AlternativeSpec::new("BB", FamilyKind::BetaBinomial, 5.0 / 3.0),
        ]
    };
    let bin_grid = |id: &str, mu0: f64, rho: f64, ls: [f64; 3]| {
        grid(
            id,
            "binomial counts (n = 10), zero inflation and overdispersion",
            FamilyKind::Binomial,
            1.0,
            Some(10),
            mu0,
            rho,
            vec![
                ChartSpec::ewma(ls[0]),
                ChartSpec::stein(WeightKind::Linear, ls[1]),
                ChartSpec::stein(WeightKind::Root, ls[2]),
            ],
            bin_alts(),
        )
    };
    out.push(bin_grid("table1a-mu2", 2.0, 0.0, [0.7805, 0.534, 0.4235]));
    out.push(bin_grid("table1a-mu5", 5.0, 0.0, [0.974, 0.2115, 0.0511]));
    out.push(bin_grid("table1b-mu2", 2.0, 0.5, [1.191, 0.639, 0.568]));
    out.push(bin_grid("table1b-mu5", 5.0, 0.5, [1.493, 0.225, 0.0528]));

    // NB in-control counts at I_P = 5/3; ZIP (5/3) and overdispersed NB
    // (5/2) alternatives. EWMA plus Stein linear/root.
    let nb_over_alts = || {
        vec![
            AlternativeSpec::new("ZIP", FamilyKind::ZiPoisson, 5.0 / 3.0),
            AlternativeSpec::new("NB", FamilyKind::NegBinomial, 5.0 / 3.0),
            AlternativeSpec::new("oNB", FamilyKind::NegBinomial, 5.0 / 2.0),
        ]
    };
    let nb_over_grid = |id: &str, mu0: f64, rho: f64, ls: [f64; 3]| {
        grid(
            id,
            "negative-binomial counts (I_P = 5/3), zero inflation and overdispersion",
            FamilyKind::NegBinomial,
            5.0 / 3.0,
            None,
            mu0,
            rho,
            vec![
                ChartSpec::ewma(ls[0]),
                ChartSpec::stein(WeightKind::Linear, ls[1]),
                ChartSpec::stein(WeightKind::Root, ls[2]),
            ],
            nb_over_alts(),
        )
    };
    out.push(nb_over_grid(
        "table2a-mu2",
        2.0,
        0.0,
        [1.156, 0.349, 0.3146],
    ));
    out.push(nb_over_grid(
        "table2a-mu5",
        5.0,
        0.0,
        [1.805, 0.1554, 0.0883],
    ));
    out.push(nb_over_grid("table2b-mu2", 2.0, 0.5, [1.855, 0.45, 0.4415]));
    out.push(nb_over_grid("table2b-mu5", 5.0, 0.5, [2.78, 0.177, 0.1105]));

    // Poisson in-control counts; Good alternatives at I_P = 3/4 and 1/2.
    // EWMA plus Stein inverse/shifted-PMF.
    let poi_alts = || {
        vec![
            AlternativeSpec::new("Poi", FamilyKind::Poisson, 1.0),
            AlternativeSpec::new("Good-3/4", FamilyKind::Good, 0.75),
            AlternativeSpec::new("Good-1/2", FamilyKind::Good, 0.5),
        ]
    };
    let poi_grid = |id: &str, mu0: f64, rho: f64, ls: [f64; 3]| {
        grid(
            id,
            "Poisson counts, underdispersion",
            FamilyKind::Poisson,
            1.0,
            None,
            mu0,
            rho,
            vec![
                ChartSpec::ewma(ls[0]),
                ChartSpec::stein(WeightKind::Inverse, ls[1]),
                ChartSpec::stein(WeightKind::ShiftedPmf, ls[2]),
            ],
            poi_alts(),
        )
    };
    out.push(poi_grid("table3a-mu2", 2.0, 0.0, [0.877, 0.223, 0.608]));
    out.push(poi_grid("table3a-mu5", 5.0, 0.0, [1.388, 0.1775, 0.293]));
    out.push(poi_grid("table3b-mu2", 2.0, 0.5, [1.351, 0.2467, 0.7235]));
    out.push(poi_grid("table3b-mu5", 5.0, 0.5, [2.123, 0.1707, 0.345]));

    // NB in-control counts at I_P = 5/3; underdispersed NB (4/3) and
    // Poisson alternatives. EWMA plus Stein inverse/shifted-PMF.
    let nb_under_alts = || {
        vec![
            AlternativeSpec::new("NB", FamilyKind::NegBinomial, 5.0 / 3.0),
            AlternativeSpec::new("uNB", FamilyKind::NegBinomial, 4.0 / 3.0),
            AlternativeSpec::new("Poi", FamilyKind::Poisson, 1.0),
        ]
    };
    let nb_under_grid = |id: &str, mu0: f64, rho: f64, ls: [f64; 3]| {
        grid(
            id,
            "negative-binomial counts (I_P = 5/3), underdispersion",
            FamilyKind::NegBinomial,
            5.0 / 3.0,
            None,
            mu0,
            rho,
            vec![
                ChartSpec::ewma(ls[0]),
                ChartSpec::stein(WeightKind::Inverse, ls[1]),
                ChartSpec::stein(WeightKind::ShiftedPmf, ls[2]),
            ],
            nb_under_alts(),
        )
    };
    out.push(nb_under_grid(
        "table4a-mu2",
        2.0,
        0.0,
        [1.156, 0.2215, 0.4163],
    ));
    out.push(nb_under_grid("table4a-mu5", 5.0, 0.0, [1.805, 0.165, 0.22]));
    out.push(nb_under_grid(
        "table4b-mu2",
        2.0,
        0.5,
        [1.855, 0.2412, 0.4626],
    ));
    out.push(nb_under_grid(
        "table4b-mu5",
        5.0,
        0.5,
        [2.78, 0.1727, 0.247],
    ));

    // The Poi-INAR(1) emergency-monitoring design set: in-control ARLs of
    // the c-chart and five EWMA-type designs at mu0 = 2.1, rho = 0.78.
    let mut sec5 = grid(
        "sec5-designs",
        "Poi-INAR(1) health-surveillance design set, in-control ARLs",
        FamilyKind::Poisson,
        1.0,
        None,
        2.1,
        0.78,
        vec![
            ChartSpec::c_chart(0.0, 6.0),
            ChartSpec::ewma(1.851),
            ChartSpec::stein(WeightKind::Linear, 0.848),
            ChartSpec::stein(WeightKind::Root, 0.829),
            ChartSpec::stein(WeightKind::Inverse, 0.2994),
            ChartSpec::stein(WeightKind::ShiftedPmf, 0.9594),
        ],
        vec![AlternativeSpec::new("Poi", FamilyKind::Poisson, 1.0)],
    );
    sec5.shifts = vec![0.0];
    out.push(sec5);

    out
}

/// Looks up a built-in scenario by id.
pub fn lookup_scenario(id: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.id == id)
}
