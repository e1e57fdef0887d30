use serde_json::{json, Value};
use vpair_core::dynamics::integrate;
use vpair_core::entanglement::negativity;
use vpair_core::model::{rhs_pumped, rhs_pumpless, ReducedState};
use vpair_core::steadystate::steady_analytic;
use vpair_core::sweep::{find_optimal_pump, sweep_distance, sweep_pump, Optimum, SweepRow, SweepTable};
use vpair_core::validation;

use crate::config::{Command, Resolved};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub const STATE_COLUMNS: [&str; 13] = [
    "rho11", "rho22", "rho33", "rho44", "rho55", "rho66", "rho77", "rho88", "rho99", "re_rho37", "im_rho37",
    "re_rho68", "im_rho68",
];

/// Output of one command: the table, extra metadata, and for `validate`
/// the names of failed checks.
pub struct Report {
    pub table: Table,
    pub extra: Value,
    pub failed: Vec<String>,
}

fn state_cells(s: &ReducedState) -> impl Iterator<Item = Cell> {
    s.to_real().into_iter().map(Cell::Num)
}

pub fn run(cfg: &Resolved) -> Result<Report, CliError> {
    match cfg.command {
        Command::Trajectory => trajectory(cfg),
        Command::Steady => steady(cfg),
        Command::SweepPump => sweep_pump_cmd(cfg),
        Command::SweepDistance => sweep_distance_cmd(cfg),
        Command::Optimum => optimum(cfg),
        Command::Validate => validate(),
    }
}

fn trajectory(cfg: &Resolved) -> Result<Report, CliError> {
    let p = cfg.params;
    let init = ReducedState::excited_pair();
    let traj = if p.is_pumped() {
        integrate(|s| rhs_pumped(s, &p), init, cfg.tmax, cfg.dt)?
    } else {
        integrate(|s| rhs_pumpless(s, &p), init, cfg.tmax, cfg.dt)?
    };
    let mut cols = vec!["t"];
    cols.extend(STATE_COLUMNS);
    cols.push("negativity");
    let mut table = Table::new(cols);
    for ((t, s), n) in traj.times.iter().zip(&traj.states).zip(&traj.negativities) {
        let mut row = vec![Cell::Num(t / cfg.gamma1)];
        row.extend(state_cells(s));
        row.push(Cell::Num(*n));
        table.push(row);
    }
    let extra = json!({ "points": traj.len(), "max_trace_drift": traj.max_trace_drift() });
    Ok(Report { table, extra, failed: Vec::new() })
}

fn steady(cfg: &Resolved) -> Result<Report, CliError> {
    let s = steady_analytic(&cfg.params)?;
    let mut cols = vec!["Lambda1", "Lambda2"];
    cols.extend(STATE_COLUMNS);
    cols.extend(["negativity", "residual"]);
    let mut table = Table::new(cols);
    let mut row = vec![Cell::Num(cfg.params.pump1()), Cell::Num(cfg.params.pump2())];
    row.extend(state_cells(&s.state));
    row.push(Cell::Num(negativity(&s.state)?));
    row.push(Cell::Num(s.residual));
    table.push(row);
    let extra = json!({ "route": s.route, "zero_pump_limit": s.zero_pump_limit });
    Ok(Report { table, extra, failed: Vec::new() })
}

fn sweep_row(r: &SweepRow) -> Vec<Cell> {
    vec![
        Cell::Num(r.negativity),
        Cell::Num(r.rho99),
        Cell::Num(r.rho37.re),
        Cell::Num(r.rho37.im),
        Cell::Num(r.rho68.re),
        Cell::Num(r.rho68.im),
        Cell::Num(r.residual),
    ]
}

const SWEEP_COLUMNS: [&str; 7] = ["negativity", "rho99", "re_rho37", "im_rho37", "re_rho68", "im_rho68", "residual"];

fn sweep_extra(t: &SweepTable) -> Value {
    json!({ "axis": t.metadata.axis, "timestamp": t.metadata.timestamp })
}

fn sweep_pump_cmd(cfg: &Resolved) -> Result<Report, CliError> {
    let t = sweep_pump(&cfg.params, &cfg.grid.values())?;
    let mut cols = vec!["Lambda"];
    cols.extend(SWEEP_COLUMNS);
    let mut table = Table::new(cols);
    for r in &t.rows {
        let mut row = vec![Cell::Num(r.x)];
        row.extend(sweep_row(r));
        table.push(row);
    }
    Ok(Report { table, extra: sweep_extra(&t), failed: Vec::new() })
}

fn sweep_distance_cmd(cfg: &Resolved) -> Result<Report, CliError> {
    let pump = cfg.canonical.pump.expect("resolved distance sweeps carry Lambda");
    let t = sweep_distance(&cfg.params, &cfg.presets, pump)?;
    let mut cols = vec!["preset", "R"];
    cols.extend(SWEEP_COLUMNS);
    let mut table = Table::new(cols);
    for r in &t.rows {
        let mut row = vec![Cell::from(r.preset.clone().unwrap_or_default()), Cell::Num(r.x)];
        row.extend(sweep_row(r));
        table.push(row);
    }
    Ok(Report { table, extra: sweep_extra(&t), failed: Vec::new() })
}

fn optimum(cfg: &Resolved) -> Result<Report, CliError> {
    let [lo, hi] = cfg.bracket;
    let mut table = Table::new(vec!["outcome", "Lambda", "negativity", "method"]);
    match find_optimal_pump(&cfg.params, (lo, hi))? {
        Optimum::Found { pump, negativity, method } => {
            let method = serde_json::to_value(method)?.as_str().unwrap_or_default().to_string();
            table.push(vec!["found".into(), pump.into(), negativity.into(), method.into()]);
        }
        Optimum::NoEntanglement { .. } => {
            table.push(vec!["no_entanglement".into(), f64::NAN.into(), 0.0.into(), "".into()]);
        }
    }
    Ok(Report { table, extra: json!({}), failed: Vec::new() })
}

fn validate() -> Result<Report, CliError> {
    let report = validation::run_all();
    let mut table = Table::new(vec!["check", "passed", "max_residual", "tolerance", "detail"]);
    for c in &report.checks {
        table.push(vec![
            c.name.into(),
            c.passed.into(),
            c.max_residual.into(),
            c.tolerance.into(),
            c.detail.clone().into(),
        ]);
    }
    let failed = report.failures().map(|c| c.name.to_string()).collect();
    Ok(Report { table, extra: json!({ "passed": report.passed() }), failed })
}
