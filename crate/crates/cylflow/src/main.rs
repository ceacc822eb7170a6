use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use cylflow::bubbles::{detect_concentration, extract_bubble, BubbleExtract};
use cylflow::diagnostics::{
    angular_decay_fit, ell_rate_check, modification_norm_report, residue_bounds_report,
    residue_snapshot, LemmaReport, Q_DEFAULT,
};
use cylflow::error::{Error, Result};
use cylflow::flow::{ledger_checks, run_flow};
use cylflow::hopf::{
    build_modification, hopf_from_map, stationarity_defect, BoundaryPole,
};
use cylflow::moebius::Side;
use cylflow::moebius::MoebiusParams;
use cylflow::oracles::run_all;
use cylflow::scenario::{
    read_ledger_csv, read_snapshot, write_ledger_csv, write_snapshot, Scenario,
};

#[derive(Parser)]
#[command(name = "cylflow", about = "Harmonic map flow lab on hyperbolic cylinders")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Seed for any randomized selection (oracle fields).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's `out` key or `<config dir>/out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a flow scenario, emitting a ledger and periodic snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Snapshot cadence in recorded ledger rows (overrides the scenario).
        #[arg(long)]
        snapshots: Option<usize>,
    },
    /// Run the diagnostics suite over a completed run's output directory.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Post-process boundary bubble extractions from the final snapshot.
    Bubble {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the synthetic verification oracles.
    Oracle,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::DtCollapse { .. } => 3,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Run { config, snapshots } => cmd_run(&config, cli.out, snapshots),
        Cmd::Check { config } => cmd_check(&config, cli.out),
        Cmd::Bubble { config } => cmd_bubble(&config, cli.out),
        Cmd::Oracle => cmd_oracle(cli.seed.unwrap_or(0)),
    }
}

fn resolve_out(config: &Path, sc: &Scenario, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| sc.out_dir.clone()).unwrap_or_else(|| {
        config
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("out")
    })
}

fn cmd_run(config: &Path, out: Option<PathBuf>, snapshots: Option<usize>) -> Result<i32> {
    let sc = Scenario::from_file(config)?;
    let out_dir = resolve_out(config, &sc, out);
    std::fs::create_dir_all(&out_dir)?;
    let state = sc.build_state()?;
    let cadence = snapshots.unwrap_or(sc.snapshot_every);
    let run_cfg = sc.run_config();
    let dir = out_dir.clone();
    let mut recorded = 0usize;
    let final_state = run_flow(state, &run_cfg, move |step, s| {
        if cadence > 0 && recorded % cadence == 0 {
            write_snapshot(&dir.join(format!("snap_{step:06}.csv")), s)?;
        }
        recorded += 1;
        Ok(())
    })?;
    write_snapshot(&out_dir.join("snap_final.csv"), &final_state)?;
    write_ledger_csv(&out_dir.join("ledger.csv"), &final_state.ledger)?;
    let e0 = final_state.ledger.first().map(|r| r.e).unwrap_or(0.0);
    let report = ledger_checks(&final_state.ledger, e0);
    let last = final_state.ledger.last().unwrap();
    println!(
        "run: t = {:.6}, E = {:.6e}, ell = {:.6}, |b+| = {:.4}, |b-| = {:.4}",
        last.t, last.e, last.ell, last.abs_bp, last.abs_bm
    );
    println!(
        "run: {} ledger rows, {} energy violations",
        final_state.ledger.len(),
        report.energy_violations
    );
    Ok(0)
}

fn snapshot_paths(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(out_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("snap_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    // snap_final sorts after the numbered snapshots, which is the order we want
    Ok(paths)
}

fn side_moebius(meta: &cylflow::scenario::SnapshotMeta, side: Side) -> Result<MoebiusParams<f64>> {
    match side {
        Side::Minus => MoebiusParams::new(meta.b_minus, meta.phi_minus),
        Side::Plus => MoebiusParams::new(meta.b_plus, meta.phi_plus),
    }
}

fn mark_anchor_poles(
    h: &mut cylflow::hopf::HopfField<f64>,
    meta: &cylflow::scenario::SnapshotMeta,
) -> Result<()> {
    // snapshots do not persist the boundary parameter fields, so re-mark the
    // anchor poles from the Möbius data in the sidecar
    if !h.poles.is_empty() {
        return Ok(());
    }
    let n_t = h.cyl.n_theta();
    for side in [Side::Minus, Side::Plus] {
        let m = side_moebius(meta, side)?;
        for idx in cylflow::flow::snapped_anchor_indices(&m, n_t) {
            h.poles.push(BoundaryPole {
                side,
                theta: h.cyl.theta_at(idx),
            });
        }
    }
    Ok(())
}

fn cmd_check(config: &Path, out: Option<PathBuf>) -> Result<i32> {
    let sc = Scenario::from_file(config)?;
    let out_dir = resolve_out(config, &sc, out);
    let ledger = read_ledger_csv(&out_dir.join("ledger.csv"))?;
    let e0 = ledger.first().map(|r| r.e).unwrap_or(0.0);
    let lreport = ledger_checks(&ledger, e0);

    let paths = snapshot_paths(&out_dir)?;
    if paths.is_empty() {
        return Err(Error::Validation(format!(
            "no snapshots found in {}",
            out_dir.display()
        )));
    }
    let mut snaps_minus = Vec::new();
    let mut snaps_plus = Vec::new();
    let mut last = None;
    for p in &paths {
        let (map, meta) = read_snapshot(p)?;
        let mut h = hopf_from_map(&map);
        mark_anchor_poles(&mut h, &meta)?;
        let tension = ledger
            .iter()
            .min_by(|a, b| {
                (a.t - meta.t)
                    .abs()
                    .partial_cmp(&(b.t - meta.t).abs())
                    .unwrap()
            })
            .map(|r| r.tension_norm)
            .unwrap_or(0.0);
        if let Ok(s) = residue_snapshot(&h, &side_moebius(&meta, Side::Minus)?, Side::Minus, tension)
        {
            snaps_minus.push(s);
        }
        if let Ok(s) = residue_snapshot(&h, &side_moebius(&meta, Side::Plus)?, Side::Plus, tension) {
            snaps_plus.push(s);
        }
        last = Some((map, meta));
    }
    let (final_map, final_meta) = last.unwrap();

    let mut reports: Vec<LemmaReport<f64>> = Vec::new();
    for (snaps, tag) in [(&snaps_minus, "minus"), (&snaps_plus, "plus")] {
        match residue_bounds_report(snaps, Q_DEFAULT) {
            Ok(mut r) => {
                r.lemma_id = format!("{} ({tag})", r.lemma_id);
                reports.push(r);
            }
            Err(e) => eprintln!("residue bounds ({tag}): {e}"),
        }
    }
    reports.push(ell_rate_check(&ledger, &final_map, 0.1));
    reports.push(angular_decay_fit(&final_map, 1.0)?);
    {
        let mut h = hopf_from_map(&final_map);
        mark_anchor_poles(&mut h, &final_meta)?;
        for (side, tag) in [(Side::Minus, "minus"), (Side::Plus, "plus")] {
            if let Ok(ms) = build_modification(&h, side, 0.2) {
                let mut r = modification_norm_report(&ms, &final_map.cyl, 0.5, 3.0);
                r.lemma_id = format!("{} ({tag})", r.lemma_id);
                reports.push(r);
            }
            println!(
                "stationarity defect ({tag}): {:.4e}",
                stationarity_defect(&h, side)
            );
        }
    }

    let mut text = String::new();
    let mut csv = String::from("lemma,verdict\n");
    for r in &reports {
        text.push_str(&r.summary());
        text.push('\n');
        csv.push_str(&format!("{},{:?}\n", r.lemma_id, r.verdict));
        print!("{}", r.summary());
    }
    println!(
        "ledger: {} rows, {} energy violations, good-time ell ratio = {:?}",
        ledger.len(),
        lreport.energy_violations,
        lreport.ell_ratio_good_times
    );
    std::fs::write(out_dir.join("reports.txt"), text)?;
    std::fs::write(out_dir.join("reports.csv"), csv)?;
    Ok(0)
}

fn write_bubble_csv(path: &Path, b: &BubbleExtract<f64>) -> Result<()> {
    let (n_r, n_a, dim) = b.disc_map.dim();
    let mut out = String::from("# r, alpha, values..., halo\n");
    for k in 0..n_r {
        for l in 0..n_a {
            let mut cells = vec![format!("{:.12e}", b.radii[k]), format!("{:.12e}", b.alphas[l])];
            for d in 0..dim {
                cells.push(format!("{:.12e}", b.disc_map[[k, l, d]]));
            }
            cells.push(if b.halo_mask[[k, l]] { "1" } else { "0" }.into());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_bubble(config: &Path, out: Option<PathBuf>) -> Result<i32> {
    let sc = Scenario::from_file(config)?;
    let out_dir = resolve_out(config, &sc, out);
    let (map, meta) = read_snapshot(&out_dir.join("snap_final.csv"))?;
    for (side, tag) in [(Side::Minus, "minus"), (Side::Plus, "plus")] {
        let m = side_moebius(&meta, side)?;
        match extract_bubble(&map, &m, side, 33) {
            Ok(b) => {
                println!(
                    "bubble ({tag}): concentration theta = {:.4}, disc energy = {:.4e}",
                    b.concentration_theta,
                    cylflow::bubbles::disc_energy(&b)
                );
                write_bubble_csv(&out_dir.join(format!("bubble_{tag}.csv")), &b)?;
            }
            Err(Error::ExtractionRefused(msg)) => {
                println!("bubble ({tag}): refused ({msg})");
            }
            Err(e) => return Err(e),
        }
        if let Some(theta) = detect_concentration(&map, side, 0.3, 0.5) {
            println!("bubble ({tag}): oscillation concentrates near theta = {theta:.4}");
        }
    }
    Ok(0)
}

fn cmd_oracle(seed: u64) -> Result<i32> {
    let outcomes = run_all(seed);
    let mut ok = true;
    for o in &outcomes {
        println!("{}: {}  ({})", o.name, if o.pass { "pass" } else { "FAIL" }, o.detail);
        ok &= o.pass;
    }
    Ok(if ok { 0 } else { 4 })
}
