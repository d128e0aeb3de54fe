//! The four Monte Carlo studies.
//!
//! Every study builds the statistics once per configuration (correlation
//! matrices, sectors, deterministic equivalents), then runs independent trials
//! in the ambient rayon pool. Trial outcomes are collected in trial order and
//! reduced sequentially, so results do not depend on the number of threads.

use std::time::Instant;

use rayon::prelude::*;

use super::config::SystemConfig;
use super::output::{ExperimentResult, Record};
use crate::channel_model::{build_correlation_matrix, place_users, ChannelSet, CorrelationMatrix, UeGeometry};
use crate::det_equiv::{deterministic_equivalents, DetEqResult};
use crate::exact_receivers::{evaluate_matched_filter, evaluate_mmse, exact_omega_matrix};
use crate::sectorization::{build_sectors, SectorSet};
use crate::tsb::{evaluate_selection, select_all, BeamSelection};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Accuracy,
    DeltaSweep,
    LoadSweep,
    AngleProfile,
}

impl Study {
    pub const ALL: [Study; 4] = [Study::Accuracy, Study::DeltaSweep, Study::LoadSweep, Study::AngleProfile];

    pub fn name(self) -> &'static str {
        match self {
            Study::Accuracy => "accuracy",
            Study::DeltaSweep => "delta-sweep",
            Study::LoadSweep => "load-sweep",
            Study::AngleProfile => "angle-profile",
        }
    }

    /// Desk-scale configuration used when no config file is given.
    pub fn default_config(self) -> SystemConfig {
        use super::config::DeltaSpec;
        let base = SystemConfig::default();
        match self {
            Study::Accuracy | Study::AngleProfile => base,
            Study::DeltaSweep => SystemConfig {
                delta: DeltaSpec::Many(vec![0.0, 0.01, 0.1, 0.5, 1.0]),
                ..base
            },
            Study::LoadSweep => SystemConfig {
                delta: DeltaSpec::Many(vec![0.01, 0.1]),
                user_counts: vec![16, 32, 48],
                ..base
            },
        }
    }

    pub fn run(self, config: &SystemConfig) -> Result<ExperimentResult> {
        match self {
            Study::Accuracy => run_accuracy_study(config),
            Study::DeltaSweep => run_delta_sweep(config),
            Study::LoadSweep => run_load_sweep(config),
            Study::AngleProfile => run_angle_profile(config),
        }
    }
}

impl std::str::FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown study {s:?}")))
    }
}

/// Runs `f` inside a dedicated pool of `threads` workers.
pub fn with_threads<T, F>(threads: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Statistics of one configuration, shared read-only by all trials.
#[derive(Debug)]
pub struct Scenario {
    pub config: SystemConfig,
    pub geometry: Vec<UeGeometry>,
    pub correlations: Vec<CorrelationMatrix>,
    pub sectors: SectorSet,
    pub det_equiv: DetEqResult,
    pub correlation_seconds: f64,
    pub det_equiv_seconds: f64,
}

impl Scenario {
    pub fn build(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_antennas;
        let k = config.n_users;
        let start = Instant::now();
        let geometry = place_users(k, config.arc_start, config.arc_end, config.angular_spread)?;
        let correlations = geometry
            .par_iter()
            .map(|g| build_correlation_matrix(g, config.antenna_spacing, n))
            .collect::<Result<Vec<_>>>()?;
        correlations
            .par_iter()
            .try_for_each(|c| c.sqrt_theta().map(|_| ()))?;
        let correlation_seconds = start.elapsed().as_secs_f64();

        let sectors = build_sectors(n, config.n_sectors)?;
        let start = Instant::now();
        let powers = vec![config.normalized_power(); k];
        let det_equiv = deterministic_equivalents(&correlations, &powers, &sectors, config.fixed_point_options())
            .map_err(|e| e.context(format!("deterministic equivalents for N={n}, K={k}")))?;
        let det_equiv_seconds = start.elapsed().as_secs_f64();
        log::info!(
            "scenario N={n} K={k} S={}: fixed point in {} iterations, rho(L) = {:.4}, {:.2}s + {:.2}s",
            config.n_sectors,
            det_equiv.iterations,
            det_equiv.spectral_radius,
            correlation_seconds,
            det_equiv_seconds
        );
        Ok(Scenario {
            config: config.clone(),
            geometry,
            correlations,
            sectors,
            det_equiv,
            correlation_seconds,
            det_equiv_seconds,
        })
    }

    /// Channel realization of trial `trial`.
    pub fn draw(&self, trial: u64) -> Result<ChannelSet> {
        let k = self.config.n_users;
        ChannelSet::draw(
            &self.correlations,
            vec![self.config.physical_power(); k],
            1.0,
            self.config.seed,
            trial,
        )
    }

    pub fn select(&self, delta: f64) -> Result<BeamSelection> {
        select_all(&self.det_equiv.omega_bar, delta, self.sectors.beams_per_sector())
    }

    fn record(&self, study: Study, scheme: &str, metric: &str, delta: Option<f64>, value: f64) -> Record {
        let c = &self.config;
        Record {
            study: study.name().to_string(),
            n_antennas: c.n_antennas,
            n_users: c.n_users,
            n_sectors: c.n_sectors,
            angular_spread: c.angular_spread,
            snr_linear: c.snr.as_linear(),
            delta,
            trials: c.trials,
            scheme: scheme.to_string(),
            metric: metric.to_string(),
            ue: None,
            sector: None,
            value,
            seed: c.seed,
        }
    }

    fn stage_timings(&self, result: &mut ExperimentResult) {
        result.timing("correlation", self.correlation_seconds);
        result.timing("det_equiv", self.det_equiv_seconds);
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Nearest-rank percentile of an unsorted sample, `q` in `[0, 1]`.
pub fn percentile(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[rank - 1]
}

fn push_rate_stats(
    out: &mut ExperimentResult,
    scenario: &Scenario,
    study: Study,
    scheme: &str,
    delta: Option<f64>,
    rates: &[f64],
) {
    for (metric, value) in [
        ("mean_rate", mean(rates)),
        ("p10_rate", percentile(rates, 0.1)),
        ("p50_rate", percentile(rates, 0.5)),
        ("p90_rate", percentile(rates, 0.9)),
    ] {
        out.records.push(scenario.record(study, scheme, metric, delta, value));
    }
}

/// Exact projections against their deterministic equivalents.
///
/// For each trial and each `(k, i)` the deviation
/// `|omega_{k,i} - omega_bar_{k,i}| / max_i omega_bar_{k,i}` is collected;
/// the records report its median, mean, 90th percentile and maximum over all
/// trials, plus the exact and approximate values of trial 0.
pub fn run_accuracy_study(config: &SystemConfig) -> Result<ExperimentResult> {
    let study = Study::Accuracy;
    let scenario = Scenario::build(config)?;
    let mut out = ExperimentResult::new(study.name(), config);
    scenario.stage_timings(&mut out);
    let omega_bar = &scenario.det_equiv.omega_bar;
    let row_max: Vec<f64> = omega_bar.row_iter().map(|r| r.max()).collect();

    let start = Instant::now();
    let per_trial = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let ch = scenario.draw(t)?;
            let exact = exact_omega_matrix(&ch, &scenario.sectors)?;
            let devs: Vec<f64> = (0..exact.nrows())
                .flat_map(|k| {
                    let exact = &exact;
                    let row_max = row_max[k];
                    (0..exact.ncols()).map(move |i| (exact[(k, i)] - omega_bar[(k, i)]).abs() / row_max)
                })
                .collect();
            Ok((devs, if t == 0 { Some(exact) } else { None }))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e: Error| e.context("accuracy study trial"))?;
    out.timing("trials", start.elapsed().as_secs_f64());

    let mut all = Vec::new();
    let mut first = None;
    for (devs, exact) in per_trial {
        all.extend(devs);
        if exact.is_some() {
            first = exact;
        }
    }
    for (metric, value) in [
        ("median_norm_dev", percentile(&all, 0.5)),
        ("mean_norm_dev", mean(&all)),
        ("p90_norm_dev", percentile(&all, 0.9)),
        ("max_norm_dev", all.iter().cloned().fold(0.0, f64::max)),
    ] {
        out.records.push(scenario.record(study, "det_equiv", metric, None, value));
    }
    if let Some(exact) = first {
        for k in 0..exact.nrows() {
            for i in 0..exact.ncols() {
                for (scheme, v) in [("exact", exact[(k, i)]), ("det_equiv", omega_bar[(k, i)])] {
                    let mut r = scenario.record(study, scheme, "omega", None, v);
                    r.ue = Some(k);
                    r.sector = Some(i);
                    out.records.push(r);
                }
            }
        }
    }
    Ok(out)
}

/// Per-trial rates of MMSE, matched filter and TSB at each selection.
struct RateTrial {
    mmse: Vec<f64>,
    mf: Vec<f64>,
    tsb: Vec<Vec<f64>>,
    mmse_seconds: f64,
    tsb_seconds: f64,
}

fn rate_trials(scenario: &Scenario, selections: &[BeamSelection]) -> Result<Vec<RateTrial>> {
    (0..scenario.config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let ch = scenario.draw(t)?;
            let start = Instant::now();
            let mmse = evaluate_mmse(&ch)?.rate;
            let mmse_seconds = start.elapsed().as_secs_f64();
            let mf = evaluate_matched_filter(&ch)?.rate;
            let start = Instant::now();
            let tsb = selections
                .iter()
                .map(|sel| evaluate_selection(&ch, &scenario.sectors, sel).map(|r| r.rate))
                .collect::<Result<Vec<_>>>()?;
            let tsb_seconds = start.elapsed().as_secs_f64();
            Ok(RateTrial {
                mmse,
                mf,
                tsb,
                mmse_seconds,
                tsb_seconds,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e: Error| e.context(format!("rate trials for K={}", scenario.config.n_users)))
}

/// Rates and beam counts of one scenario for every configured threshold.
fn rates_for_scenario(study: Study, scenario: &Scenario, out: &mut ExperimentResult) -> Result<()> {
    let deltas = scenario.config.deltas();
    let selections = deltas
        .iter()
        .map(|d| scenario.select(*d))
        .collect::<Result<Vec<_>>>()?;
    let trials = rate_trials(scenario, &selections)?;

    let mut mmse = Vec::new();
    let mut mf = Vec::new();
    let mut tsb = vec![Vec::new(); deltas.len()];
    for t in trials {
        mmse.extend(t.mmse);
        mf.extend(t.mf);
        for (acc, r) in tsb.iter_mut().zip(t.tsb) {
            acc.extend(r);
        }
        out.timing("mmse_full", t.mmse_seconds);
        out.timing("tsb_inner", t.tsb_seconds);
    }
    push_rate_stats(out, scenario, study, "mmse", None, &mmse);
    push_rate_stats(out, scenario, study, "mf", None, &mf);
    for ((delta, sel), rates) in deltas.iter().zip(&selections).zip(&tsb) {
        push_rate_stats(out, scenario, study, "tsb", Some(*delta), rates);
        out.records
            .push(scenario.record(study, "tsb", "mean_beams", Some(*delta), sel.mean_beams()));
    }
    Ok(())
}

/// Mean/percentile rates of TSB at each threshold against MMSE and matched filter.
pub fn run_delta_sweep(config: &SystemConfig) -> Result<ExperimentResult> {
    let study = Study::DeltaSweep;
    let scenario = Scenario::build(config)?;
    let mut out = ExperimentResult::new(study.name(), config);
    scenario.stage_timings(&mut out);
    rates_for_scenario(study, &scenario, &mut out)?;
    Ok(out)
}

/// The delta sweep repeated for each user count in `config.user_counts`.
pub fn run_load_sweep(config: &SystemConfig) -> Result<ExperimentResult> {
    let study = Study::LoadSweep;
    config.validate()?;
    let mut out = ExperimentResult::new(study.name(), config);
    for k in config.user_counts() {
        let scenario = Scenario::build(&config.with_users(k))?;
        scenario.stage_timings(&mut out);
        rates_for_scenario(study, &scenario, &mut out)?;
    }
    Ok(out)
}

/// Beams allocated to each user against its angular position.
///
/// Selection depends only on the statistics, so a single evaluation is
/// exact; no channel realizations are drawn.
pub fn run_angle_profile(config: &SystemConfig) -> Result<ExperimentResult> {
    let study = Study::AngleProfile;
    let scenario = Scenario::build(config)?;
    let mut out = ExperimentResult::new(study.name(), config);
    scenario.stage_timings(&mut out);
    for (k, g) in scenario.geometry.iter().enumerate() {
        let mut r = scenario.record(study, "geometry", "angle", None, g.phi_center);
        r.ue = Some(k);
        out.records.push(r);
    }
    for delta in config.deltas() {
        let sel = scenario.select(delta)?;
        for (k, d) in sel.dims.iter().enumerate() {
            let mut r = scenario.record(study, "tsb", "beams", Some(delta), *d as f64);
            r.ue = Some(k);
            out.records.push(r);
        }
        out.records
            .push(scenario.record(study, "tsb", "mean_beams", Some(delta), sel.mean_beams()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_nearest_rank() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert_eq!(percentile(&v, 0.1), 1.0);
        assert!(percentile(&[], 0.5).is_nan());
    }

    #[test]
    fn study_names_round_trip() {
        for s in Study::ALL {
            assert_eq!(s.name().parse::<Study>().unwrap(), s);
            s.default_config().validate().unwrap();
        }
        assert!("fig2".parse::<Study>().is_err());
    }

    fn small() -> SystemConfig {
        SystemConfig {
            n_antennas: 16,
            n_users: 6,
            n_sectors: 4,
            trials: 3,
            ..Default::default()
        }
    }

    #[test]
    fn delta_sweep_records() {
        let cfg = SystemConfig {
            delta: super::super::config::DeltaSpec::Many(vec![0.0, 0.5]),
            ..small()
        };
        let r = run_delta_sweep(&cfg).unwrap();
        let tsb: Vec<_> = r.select("tsb", "mean_rate").collect();
        let mmse: Vec<_> = r.select("mmse", "mean_rate").collect();
        assert_eq!(tsb.len(), 2);
        assert_eq!(mmse.len(), 1);
        assert!((tsb[0].value - mmse[0].value).abs() < 1e-9 * mmse[0].value);
        let beams: Vec<_> = r.select("tsb", "mean_beams").map(|r| r.value).collect();
        assert_eq!(beams[0], 16.0);
        assert!(beams[1] <= 16.0);
        assert!(r.timings.iter().any(|t| t.stage == "det_equiv"));
    }

    #[test]
    fn angle_profile_at_zero_delta_gives_full_dimension() {
        let cfg = SystemConfig {
            delta: super::super::config::DeltaSpec::One(0.0),
            ..small()
        };
        let r = run_angle_profile(&cfg).unwrap();
        let beams: Vec<_> = r.select("tsb", "beams").map(|r| r.value).collect();
        assert_eq!(beams, vec![16.0; 6]);
        assert_eq!(r.select("geometry", "angle").count(), 6);
    }

    #[test]
    fn load_sweep_covers_each_user_count() {
        let cfg = SystemConfig {
            user_counts: vec![2, 4],
            ..small()
        };
        let r = run_load_sweep(&cfg).unwrap();
        let ks: Vec<_> = r.select("mmse", "mean_rate").map(|r| r.n_users).collect();
        assert_eq!(ks, vec![2, 4]);
    }
}
