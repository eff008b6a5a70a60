//! Batch evaluation protocol: randomized hover references, fixed-duration
//! runs, windowed position/throttle metrics, convergence classification and
//! per-configuration summaries.
//!
//! Runs are pure functions of (configuration, reference, spec); references are
//! drawn once per seed and reused verbatim for every configuration, so
//! comparisons are paired. Batches may fan out to worker threads without
//! changing any result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aero::AeroModel;
use crate::config::ConfigError;
use crate::controller::{ControlCommand, ControlMode, Controller, ControllerConfig};
use crate::dynamics::{
    air_state, step, total_acceleration, wind_facing_heading, InnerLoopModel, SimState, Termination,
};
use crate::math::{EulerAngles, Vec3};
use crate::windfield::{RampFieldParams, WindField};
use crate::Real;

/// Any window with a larger position STD marks the run as diverged, m.
pub const DIVERGENCE_STD_M: f64 = 0.5;
/// Final-window position STD below this is required for convergence, m.
pub const CONVERGENCE_STD_M: f64 = 0.04;
/// Final-window mean throttle (fraction of max) below this is required for
/// convergence.
pub const CONVERGENCE_THROTTLE_FRACTION: f64 = 0.03;

/// Batch protocol parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchSpec<T> {
    pub n_runs: usize,
    /// Run length, s.
    pub run_duration: T,
    /// Transient excluded from metrics, s.
    pub warmup: T,
    /// Metric window length, s; must divide `run_duration - warmup`.
    pub window: T,
    /// Integration step, s.
    pub sim_dt: T,
    /// Control period in integration steps.
    pub control_divisor: usize,
    pub seed: u64,
    /// Nominal free-stream speed, m/s.
    pub nominal_wind: T,
    /// Reference sampling box: streamwise extent, m.
    pub ref_x: (T, T),
    /// Reference sampling box: lateral extent, m.
    pub ref_y: (T, T),
    /// Reference sampling box: height above local terrain, m.
    pub ref_height: (T, T),
    /// Leaving this streamwise extent classifies the run as diverged.
    pub exit_x: (T, T),
    pub exit_y: (T, T),
    /// Altitude ceiling for the field-exit check, m.
    pub exit_altitude_max: T,
    /// AoA excess over the stall peak that marks a stall divergence, rad.
    pub stall_margin: T,
    /// Keep full trajectories in the run results.
    pub record_trajectories: bool,
}

impl<T: Real> BatchSpec<T> {
    /// Protocol defaults over the analytic ramp: references span the slope to
    /// one slope-run downstream, 0.3-2.5 m above terrain.
    pub fn for_ramp(params: &RampFieldParams<T>, seed: u64) -> Self {
        let run = params.horizontal_run();
        let crest = params.crest_x();
        Self {
            n_runs: 300,
            run_duration: T::of(100.0),
            warmup: T::of(10.0),
            window: T::of(10.0),
            sim_dt: T::of(0.01),
            control_divisor: 2,
            seed,
            nominal_wind: params.nominal_speed,
            ref_x: (params.ramp_start_x, crest + run),
            ref_y: (T::of(-0.3), T::of(0.3)),
            ref_height: (T::of(0.3), T::of(2.5)),
            exit_x: (
                params.ramp_start_x - T::of(2.0) * run,
                crest + T::of(3.0) * run,
            ),
            exit_y: (T::of(-2.0), T::of(2.0)),
            exit_altitude_max: T::of(8.0),
            stall_margin: T::of(3f64.to_radians()),
            record_trajectories: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_runs == 0 {
            return Err(ConfigError::invalid("batch: n_runs must be at least 1"));
        }
        if !(self.sim_dt > T::zero()) || self.control_divisor == 0 {
            return Err(ConfigError::invalid("batch: malformed timing"));
        }
        let span = self.run_duration - self.warmup;
        let ratio = span / self.window;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > T::of(1e-9) || rounded < T::one() {
            return Err(ConfigError::invalid(
                "batch: window must divide run_duration - warmup",
            ));
        }
        for (lo, hi) in [self.ref_x, self.ref_y, self.ref_height] {
            if !(lo <= hi) {
                return Err(ConfigError::invalid("batch: malformed sampling box"));
            }
        }
        Ok(())
    }

    pub fn window_count(&self) -> usize {
        let span = self.run_duration - self.warmup;
        (span / self.window)
            .round()
            .to_f64()
            .expect("finite window count") as usize
    }

    pub fn control_period(&self) -> T {
        self.sim_dt * T::of(self.control_divisor as f64)
    }
}

/// Per-window statistics at control rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics<T> {
    pub index: usize,
    /// RMS distance from the window centroid (sqrt of summed per-axis
    /// variances), m.
    pub position_std: T,
    /// Mean throttle as a fraction of the thrust ceiling.
    pub mean_throttle: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunClassification {
    Converged,
    Diverged,
    Neither,
    Crashed,
}

impl RunClassification {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunClassification::Converged => "converged",
            RunClassification::Diverged => "diverged",
            RunClassification::Neither => "neither",
            RunClassification::Crashed => "crashed",
        }
    }
}

/// Why a run ended before its nominal duration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EarlyStop {
    Stall,
    FieldExit,
    AttitudeEnvelope,
    TerrainContact,
    NonFinite,
}

/// One control-rate trajectory row.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrajectorySample<T> {
    pub time: T,
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    pub attitude: EulerAngles<T>,
    /// Thrust, N.
    pub throttle: T,
    pub airspeed: T,
    pub alpha: T,
    pub mode: ControlMode,
}

/// Outcome of a single run.
#[derive(Clone, Debug, Serialize)]
pub struct RunResult<T> {
    pub reference: Vec3<T>,
    pub classification: RunClassification,
    pub windows: Vec<WindowMetrics<T>>,
    pub early_stop: Option<(T, EarlyStop)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrajectorySample<T>>,
}

/// Draws the reference positions for a batch: uniform over the sampling box,
/// with altitude measured above local terrain. One draw per seed, reused for
/// every configuration.
pub fn sample_references<T: Real>(spec: &BatchSpec<T>, field: &WindField<T>) -> Vec<Vec3<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut uniform = |lo: T, hi: T| {
        let u: f64 = rng.gen();
        lo + (hi - lo) * T::of(u)
    };
    (0..spec.n_runs)
        .map(|_| {
            let x = uniform(spec.ref_x.0, spec.ref_x.1);
            let y = uniform(spec.ref_y.0, spec.ref_y.1);
            let height = uniform(spec.ref_height.0, spec.ref_height.1);
            let altitude = field.terrain_height(x, y) + height;
            Vec3::new(x, y, -altitude)
        })
        .collect()
}

/// Windowed-threshold classification: diverged if any window STD exceeds
/// 0.5 m, converged if the final window is below 0.04 m with mean throttle
/// under 3%, otherwise neither.
pub fn classify<T: Real>(windows: &[WindowMetrics<T>]) -> RunClassification {
    assert!(
        !windows.is_empty(),
        "classification needs at least one window"
    );
    if windows
        .iter()
        .any(|w| w.position_std > T::of(DIVERGENCE_STD_M))
    {
        return RunClassification::Diverged;
    }
    let last = windows.last().expect("non-empty");
    if last.position_std < T::of(CONVERGENCE_STD_M)
        && last.mean_throttle < T::of(CONVERGENCE_THROTTLE_FRACTION)
    {
        RunClassification::Converged
    } else {
        RunClassification::Neither
    }
}

fn position_std<T: Real>(points: &[Vec3<T>]) -> T {
    let n = T::of(points.len() as f64);
    let mut mean = Vec3::zeros();
    for p in points {
        mean += *p;
    }
    mean = mean / n;
    let mut var = T::zero();
    for p in points {
        var += (*p - mean).norm_squared();
    }
    (var / n).sqrt()
}

struct ControlTick<T> {
    position: Vec3<T>,
    throttle_fraction: T,
}

/// Hover entry state at `reference`: at rest over the ground, facing the
/// wind, pitched to the local trim AoA, with the thrust that balances the
/// streamwise axis. Mirrors a vehicle transitioning into soaring from
/// steady powered flight.
pub fn initial_hover_state<T: Real>(
    reference: Vec3<T>,
    field: &WindField<T>,
    aero: &AeroModel<T>,
    thrust_max: T,
) -> SimState<T> {
    let wind = field.wind_at(reference).wind;
    let yaw = wind_facing_heading(wind).unwrap_or(T::zero());
    let mut state = SimState::at_rest(reference, yaw);
    let airspeed = wind.as_vec3().norm();
    if let Some(alpha_trim) = aero.trim_alpha(airspeed) {
        let flow_angle = wind.upward().atan2(wind.horizontal_speed());
        let limit = T::of(20f64.to_radians());
        state.attitude.pitch = (alpha_trim - flow_angle).max(-limit).min(limit);
    }
    let residual = total_acceleration(&state, aero, wind);
    let thrust_axis_x = state.attitude.pitch.cos() * state.attitude.yaw.cos();
    if thrust_axis_x.abs() > T::of(0.1) {
        let balance = -aero.mass * residual.x / thrust_axis_x;
        state.throttle = balance.max(T::zero()).min(thrust_max);
    }
    state
}

/// Simulates one hover run: the aircraft starts trimmed at the reference,
/// facing the wind, and is commanded to hold position for the full duration.
pub fn run_single<T: Real>(
    cfg: &ControllerConfig<T>,
    reference: Vec3<T>,
    spec: &BatchSpec<T>,
    field: &WindField<T>,
    aero: &AeroModel<T>,
) -> RunResult<T> {
    let inner = InnerLoopModel::standard(cfg.thrust_max);
    let mut state = initial_hover_state(reference, field, aero, cfg.thrust_max);
    let mut controller = Controller::new(cfg.clone());
    let mut command = ControlCommand::hold(&state);
    let control_period = spec.control_period();

    let n_steps = (spec.run_duration / spec.sim_dt)
        .round()
        .to_f64()
        .expect("finite step count") as usize;
    let mut ticks: Vec<ControlTick<T>> = Vec::with_capacity(n_steps / spec.control_divisor + 1);
    let mut trajectory = Vec::new();
    let mut early_stop = None;

    let stall_alpha = aero.lift.alpha_stall + spec.stall_margin;
    'sim: for step_index in 0..n_steps {
        if step_index % spec.control_divisor == 0 {
            let wind = field.wind_at(state.position).wind;
            let air = air_state(&state, wind);
            let accel = total_acceleration(&state, aero, wind);

            if air.alpha_valid && air.alpha > stall_alpha {
                early_stop = Some((state.time, EarlyStop::Stall));
                break 'sim;
            }
            let altitude = -state.position.z;
            let outside = state.position.x < spec.exit_x.0
                || state.position.x > spec.exit_x.1
                || state.position.y < spec.exit_y.0
                || state.position.y > spec.exit_y.1
                || altitude > spec.exit_altitude_max;
            if outside {
                early_stop = Some((state.time, EarlyStop::FieldExit));
                break 'sim;
            }

            command = controller.step(reference, &state, &air, aero, accel, control_period);
            ticks.push(ControlTick {
                position: state.position,
                throttle_fraction: state.throttle / cfg.thrust_max,
            });
            if spec.record_trajectories {
                trajectory.push(TrajectorySample {
                    time: state.time,
                    position: state.position,
                    velocity: state.velocity,
                    attitude: state.attitude,
                    throttle: state.throttle,
                    airspeed: air.airspeed,
                    alpha: air.alpha,
                    mode: command.mode,
                });
            }
        }
        match step(
            &state,
            &command.to_actuator_command(),
            field,
            aero,
            &inner,
            spec.sim_dt,
        ) {
            Ok(next) => state = next,
            Err(cause) => {
                let reason = match cause {
                    Termination::AttitudeEnvelope => EarlyStop::AttitudeEnvelope,
                    Termination::TerrainContact => EarlyStop::TerrainContact,
                    Termination::NonFinite => EarlyStop::NonFinite,
                };
                early_stop = Some((state.time, reason));
                break 'sim;
            }
        }
    }

    let ticks_per_window = (spec.window / control_period)
        .round()
        .to_f64()
        .expect("finite") as usize;
    let warmup_ticks = (spec.warmup / control_period)
        .round()
        .to_f64()
        .expect("finite") as usize;
    let mut windows = Vec::new();
    for w in 0..spec.window_count() {
        let start = warmup_ticks + w * ticks_per_window;
        let end = start + ticks_per_window;
        if end > ticks.len() {
            break;
        }
        let slice = &ticks[start..end];
        let points: Vec<Vec3<T>> = slice.iter().map(|t| t.position).collect();
        let mut throttle = T::zero();
        for t in slice {
            throttle += t.throttle_fraction;
        }
        windows.push(WindowMetrics {
            index: w,
            position_std: position_std(&points),
            mean_throttle: throttle / T::of(slice.len() as f64),
        });
    }

    let classification = match early_stop {
        Some((_, EarlyStop::Stall)) | Some((_, EarlyStop::FieldExit)) => {
            RunClassification::Diverged
        }
        Some(_) => RunClassification::Crashed,
        None => classify(&windows),
    };

    RunResult {
        reference,
        classification,
        windows,
        early_stop,
        trajectory,
    }
}

/// Per-run summary row.
#[derive(Clone, Debug, Serialize)]
pub struct RunRow<T> {
    pub run: usize,
    pub reference: Vec3<T>,
    pub classification: RunClassification,
    pub final_position_std: Option<T>,
    pub final_mean_throttle: Option<T>,
}

/// Aggregate for one controller configuration.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigSummary<T> {
    pub name: String,
    pub converged: usize,
    pub diverged: usize,
    pub neither: usize,
    pub crashed: usize,
    pub convergence_rate: T,
    /// Fraction of runs that diverged or crashed.
    pub divergence_rate: T,
    /// Per-window mean position STD across non-diverged, non-crashed runs.
    pub window_mean_position_std: Vec<T>,
    /// Per-window mean throttle fraction across the same runs.
    pub window_mean_throttle: Vec<T>,
    pub runs: Vec<RunRow<T>>,
}

/// Deterministic batch output: identical inputs produce byte-identical JSON.
#[derive(Clone, Debug, Serialize)]
pub struct BatchSummary<T> {
    pub seed: u64,
    pub n_runs: usize,
    pub nominal_wind: T,
    /// FNV-1a hash of the reference list; equal hashes certify that all
    /// configurations saw the same references.
    pub reference_hash: String,
    pub configs: Vec<ConfigSummary<T>>,
}

fn fnv1a64(bytes: impl Iterator<Item = u8>) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Hash of a reference list (used for the paired-sampling assertion).
pub fn reference_hash<T: Real>(refs: &[Vec3<T>]) -> String {
    let bytes = refs.iter().flat_map(|r| {
        [r.x, r.y, r.z]
            .into_iter()
            .flat_map(|v| v.to_f64().expect("finite").to_bits().to_le_bytes())
    });
    format!("{:016x}", fnv1a64(bytes))
}

fn summarize_config<T: Real>(
    name: &str,
    results: &[RunResult<T>],
    window_count: usize,
) -> ConfigSummary<T> {
    let mut counts = [0usize; 4];
    for r in results {
        let i = match r.classification {
            RunClassification::Converged => 0,
            RunClassification::Diverged => 1,
            RunClassification::Neither => 2,
            RunClassification::Crashed => 3,
        };
        counts[i] += 1;
    }
    let n = T::of(results.len() as f64);
    let included: Vec<&RunResult<T>> = results
        .iter()
        .filter(|r| {
            matches!(
                r.classification,
                RunClassification::Converged | RunClassification::Neither
            )
        })
        .collect();
    let mut std_means = Vec::with_capacity(window_count);
    let mut throttle_means = Vec::with_capacity(window_count);
    for w in 0..window_count {
        let mut std_acc = T::zero();
        let mut thr_acc = T::zero();
        let mut m = 0usize;
        for r in &included {
            if let Some(win) = r.windows.get(w) {
                std_acc += win.position_std;
                thr_acc += win.mean_throttle;
                m += 1;
            }
        }
        if m > 0 {
            let m = T::of(m as f64);
            std_means.push(std_acc / m);
            throttle_means.push(thr_acc / m);
        } else {
            std_means.push(T::zero());
            throttle_means.push(T::zero());
        }
    }
    let runs = results
        .iter()
        .enumerate()
        .map(|(i, r)| RunRow {
            run: i,
            reference: r.reference,
            classification: r.classification,
            final_position_std: r.windows.last().map(|w| w.position_std),
            final_mean_throttle: r.windows.last().map(|w| w.mean_throttle),
        })
        .collect();
    ConfigSummary {
        name: name.to_string(),
        converged: counts[0],
        diverged: counts[1],
        neither: counts[2],
        crashed: counts[3],
        convergence_rate: T::of(counts[0] as f64) / n,
        divergence_rate: T::of((counts[1] + counts[3]) as f64) / n,
        window_mean_position_std: std_means,
        window_mean_throttle: throttle_means,
        runs,
    }
}

fn run_batch_inner<T: Real>(
    configs: &[(String, ControllerConfig<T>)],
    spec: &BatchSpec<T>,
    field: &WindField<T>,
    aero: &AeroModel<T>,
) -> BatchSummary<T> {
    let references = sample_references(spec, field);
    let hash = reference_hash(&references);
    let configs_out = configs
        .iter()
        .map(|(name, cfg)| {
            let results: Vec<RunResult<T>> = references
                .par_iter()
                .map(|reference| run_single(cfg, *reference, spec, field, aero))
                .collect();
            summarize_config(name, &results, spec.window_count())
        })
        .collect();
    BatchSummary {
        seed: spec.seed,
        n_runs: spec.n_runs,
        nominal_wind: spec.nominal_wind,
        reference_hash: hash,
        configs: configs_out,
    }
}

/// Runs every (configuration, reference) pair and aggregates. `threads` caps
/// the worker pool; `None` uses the process default. Individual run failures
/// are recorded as classifications, never as batch errors.
pub fn run_batch<T: Real>(
    configs: &[(String, ControllerConfig<T>)],
    spec: &BatchSpec<T>,
    field: &WindField<T>,
    aero: &AeroModel<T>,
    threads: Option<usize>,
) -> Result<BatchSummary<T>, ConfigError> {
    spec.validate()?;
    for (_, cfg) in configs {
        cfg.validate()?;
    }
    let summary = match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError::invalid(format!("thread pool: {e}")))?
            .install(|| run_batch_inner(configs, spec, field, aero)),
        _ => run_batch_inner(configs, spec, field, aero),
    };
    Ok(summary)
}

/// CSV float formatting: NaN-safe, with sub-picoscale values snapped to zero
/// so decaying exponentials do not print hundreds of digits.
fn fmt_csv<T: Real>(v: T) -> String {
    if !v.is_finite() {
        return "nan".to_string();
    }
    if v.abs() < T::of(1e-12) {
        return "0".to_string();
    }
    format!("{v}")
}

impl<T: Real + Serialize> BatchSummary<T> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable summary");
        s.push('\n');
        s
    }

    /// Per-run table: `cfg,run,ref_x,ref_y,ref_z,classification,final_std,final_throttle`.
    pub fn runs_csv(&self) -> String {
        let mut out =
            String::from("cfg,run,ref_x,ref_y,ref_z,classification,final_std,final_throttle\n");
        for cfg in &self.configs {
            for row in &cfg.runs {
                let fmt = |v: &Option<T>| match v {
                    Some(x) => fmt_csv(*x),
                    None => String::new(),
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    cfg.name,
                    row.run,
                    fmt_csv(row.reference.x),
                    fmt_csv(row.reference.y),
                    fmt_csv(row.reference.z),
                    row.classification.as_str(),
                    fmt(&row.final_position_std),
                    fmt(&row.final_mean_throttle),
                ));
            }
        }
        out
    }

    /// Text table of per-configuration rates.
    pub fn rates_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>6} {:>10} {:>10} {:>10} {:>10}\n",
            "config", "runs", "conv", "div", "neither", "crashed"
        ));
        for cfg in &self.configs {
            let n = (cfg.converged + cfg.diverged + cfg.neither + cfg.crashed).max(1);
            let pct = |c: usize| 100.0 * c as f64 / n as f64;
            out.push_str(&format!(
                "{:<10} {:>6} {:>9.1}% {:>9.1}% {:>9.1}% {:>9.1}%\n",
                cfg.name,
                n,
                pct(cfg.converged),
                pct(cfg.diverged),
                pct(cfg.neither),
                pct(cfg.crashed),
            ));
        }
        out
    }
}

/// Control-rate trajectory dump:
/// `t,x,y,z,vx,vy,vz,phi,theta,psi,throttle,V,alpha,mode`.
pub fn trajectory_csv<T: Real>(samples: &[TrajectorySample<T>]) -> String {
    let mut out = String::from("t,x,y,z,vx,vy,vz,phi,theta,psi,throttle,V,alpha,mode\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_csv(s.time),
            fmt_csv(s.position.x),
            fmt_csv(s.position.y),
            fmt_csv(s.position.z),
            fmt_csv(s.velocity.x),
            fmt_csv(s.velocity.y),
            fmt_csv(s.velocity.z),
            fmt_csv(s.attitude.roll),
            fmt_csv(s.attitude.pitch),
            fmt_csv(s.attitude.yaw),
            fmt_csv(s.throttle),
            fmt_csv(s.airspeed),
            fmt_csv(s.alpha),
            s.mode.as_str(),
        ));
    }
    out
}
