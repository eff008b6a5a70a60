//! Incremental outer-loop position guidance with weighted-least-squares
//! control allocation over (roll, pitch, thrust).
//!
//! The controller linearizes a simplified force model around the measured
//! state and commands actuator *increments* from the acceleration error; the
//! measured-acceleration feedback absorbs model error. When thrust saturates
//! at zero and switching is enabled, allocation falls back to a reduced
//! two-axis problem, giving up one translation axis so the remaining ones stay
//! fully actuated.

use serde::{Deserialize, Serialize};

use crate::aero::AeroModel;
use crate::allocation::{allocate2, allocate3};
use crate::config::ConfigError;
use crate::dynamics::{thrust_force, AirState, SimState};
use crate::math::{EulerAngles, Mat2, Mat3, Vec3};
use crate::Real;

/// Which translation axes the reduced allocation keeps controlling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchAxis {
    /// Keep longitudinal + lateral, give up altitude (actuators roll, pitch).
    Xy,
    /// Keep lateral + vertical, give up longitudinal (actuators pitch, thrust).
    Yz,
}

/// Active allocation mode of a control step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    ThreeAxis,
    ReducedXy,
    ReducedYz,
}

impl ControlMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlMode::ThreeAxis => "three_axis",
            ControlMode::ReducedXy => "reduced_xy",
            ControlMode::ReducedYz => "reduced_yz",
        }
    }
}

/// Outer-loop controller configuration; the named presets toggle the four
/// feature flags on shared gain defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControllerConfig<T> {
    /// Limit pitch commands so the predicted AoA stays below `alpha_max`.
    pub aoa_limit: bool,
    /// Include the drag column in the effectiveness matrix.
    pub drag_term: bool,
    /// Evaluate forces at the measured AoA instead of inferring it from pitch.
    pub aoa_in_effectiveness: bool,
    /// Enable the cascaded two-axis fallback on thrust saturation.
    pub switching: bool,
    pub switch_axis: SwitchAxis,
    /// Build the yz-reduced matrix from the alternative published closed form
    /// that keeps a drag-slope term in its z-row; the default (false) uses the
    /// exact sub-matrix of the summed effectiveness.
    pub yz_drag_in_z: bool,
    /// Position gains per NED axis, 1/s².
    pub kp: Vec3<T>,
    /// Velocity gains per NED axis, 1/s.
    pub kd: Vec3<T>,
    /// Allocation priorities per NED axis.
    pub axis_weights: Vec3<T>,
    /// Allocation regularizers per actuator (roll, pitch, thrust).
    pub actuator_weights: Vec3<T>,
    /// |roll| command limit, rad.
    pub roll_limit: T,
    /// Pitch command floor (negative) and ceiling, rad.
    pub pitch_min: T,
    pub pitch_max: T,
    /// Thrust command ceiling, N.
    pub thrust_max: T,
    /// AoA ceiling used by the pitch limiter, rad.
    pub alpha_max: T,
    /// Per-axis clamp on the demanded acceleration increment, m/s².
    pub accel_limit: T,
    /// Switch to reduced allocation when the unclamped thrust candidate falls
    /// to or below this value, N.
    pub thrust_switch_threshold: T,
    /// Optional first-order low-pass cutoff for the measured acceleration, Hz.
    pub accel_filter_cutoff: Option<T>,
}

impl<T: Real> ControllerConfig<T> {
    pub const PRESET_NAMES: [&'static str; 6] =
        ["base", "aos-a", "aos-d", "aos-e", "aos-sw", "saos"];

    /// Gain set tuned for height-constrained indoor soaring: longitudinal
    /// position gains above the vertical ones.
    pub fn indoor_defaults() -> Self {
        Self {
            aoa_limit: false,
            drag_term: false,
            aoa_in_effectiveness: false,
            switching: false,
            switch_axis: SwitchAxis::Xy,
            yz_drag_in_z: false,
            kp: Vec3::new(T::of(1.2), T::of(0.8), T::of(0.5)),
            kd: Vec3::new(T::of(2.0), T::of(1.6), T::of(1.3)),
            axis_weights: Vec3::new(T::of(1.0), T::of(1.0), T::of(1.0)),
            actuator_weights: Vec3::new(T::of(1e-3), T::of(1e-3), T::of(1e-3)),
            roll_limit: T::of(30f64.to_radians()),
            pitch_min: T::of(-25f64.to_radians()),
            pitch_max: T::of(25f64.to_radians()),
            thrust_max: T::of(4.0),
            alpha_max: T::of(12f64.to_radians()),
            accel_limit: T::of(6.0),
            thrust_switch_threshold: T::zero(),
            accel_filter_cutoff: None,
        }
    }

    /// Gain set for outdoor flying: vertical gains above longitudinal.
    pub fn outdoor_defaults() -> Self {
        Self {
            kp: Vec3::new(T::of(0.5), T::of(0.8), T::of(1.4)),
            kd: Vec3::new(T::of(1.3), T::of(1.6), T::of(2.2)),
            ..Self::indoor_defaults()
        }
    }

    /// One of the six evaluation presets: `base`, `aos-a`, `aos-d`, `aos-e`,
    /// `aos-sw`, `saos`.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::indoor_defaults();
        match name {
            "base" => {}
            "aos-a" => cfg.aoa_limit = true,
            "aos-d" => cfg.drag_term = true,
            "aos-e" => {
                cfg.drag_term = true;
                cfg.aoa_in_effectiveness = true;
            }
            "aos-sw" => cfg.switching = true,
            "saos" => {
                cfg.aoa_limit = true;
                cfg.drag_term = true;
                cfg.aoa_in_effectiveness = true;
                cfg.switching = true;
            }
            other => return Err(ConfigError::UnknownPreset(other.to_string())),
        }
        Ok(cfg)
    }

    /// Adopts the aircraft's AoA ceiling and a thrust ceiling scaled to its
    /// weight (calibration thrust-to-weight 0.57).
    pub fn for_aircraft(mut self, aero: &AeroModel<T>) -> Self {
        self.alpha_max = aero.alpha_max;
        self.thrust_max = T::of(0.57) * aero.mass * crate::standard_gravity::<T>();
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |v: Vec3<T>| v.x > T::zero() && v.y > T::zero() && v.z > T::zero();
        if !pos(self.kp) || !pos(self.kd) {
            return Err(ConfigError::invalid("controller: gains must be positive"));
        }
        if !pos(self.axis_weights) || !pos(self.actuator_weights) {
            return Err(ConfigError::invalid("controller: weights must be positive"));
        }
        if !(self.roll_limit > T::zero())
            || !(self.pitch_min < self.pitch_max)
            || !(self.thrust_max > T::zero())
        {
            return Err(ConfigError::invalid(
                "controller: malformed actuator limits",
            ));
        }
        if !(self.accel_limit > T::zero()) {
            return Err(ConfigError::invalid(
                "controller: accel_limit must be positive",
            ));
        }
        Ok(())
    }
}

/// Command produced by one control step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand<T> {
    pub roll: T,
    pub pitch: T,
    pub thrust: T,
    pub mode: ControlMode,
    /// Clamped acceleration-increment demand, m/s².
    pub desired_accel: Vec3<T>,
    /// Actuator increments from the 3-axis allocation (roll, pitch, thrust).
    pub increments: Vec3<T>,
}

impl<T: Real> ControlCommand<T> {
    /// Command that holds the current actuator state.
    pub fn hold(state: &SimState<T>) -> Self {
        Self {
            roll: state.attitude.roll,
            pitch: state.attitude.pitch,
            thrust: state.throttle,
            mode: ControlMode::ThreeAxis,
            desired_accel: Vec3::zeros(),
            increments: Vec3::zeros(),
        }
    }

    pub fn to_actuator_command(&self) -> crate::dynamics::ActuatorCommand<T> {
        crate::dynamics::ActuatorCommand {
            roll: self.roll,
            pitch: self.pitch,
            thrust: self.thrust,
        }
    }
}

/// Thrust contribution to the control effectiveness matrix
/// (columns roll, pitch, thrust; rows NED x, y, z).
pub fn thrust_effectiveness<T: Real>(att: &EulerAngles<T>, thrust: T) -> Mat3<T> {
    let (sph, cph) = att.roll.sin_cos();
    let (sth, cth) = att.pitch.sin_cos();
    let (sps, cps) = att.yaw.sin_cos();
    Mat3::from_rows([
        [
            -cph * sth * sps * thrust,
            (-sth * cps - sph * cth * sps) * thrust,
            cth * cps - sph * sth * sps,
        ],
        [
            cph * sth * cps * thrust,
            (-sth * sps + sph * cth * cps) * thrust,
            cth * sps + sph * sth * cps,
        ],
        [sph * sth * thrust, -cph * cth * thrust, -cph * sth],
    ])
}

/// Lift contribution: `lift` is the signed lift force (negative upward) and
/// `lift_slope` its AoA derivative, with pitch assumed to move AoA one-to-one.
pub fn lift_effectiveness<T: Real>(att: &EulerAngles<T>, lift: T, lift_slope: T) -> Mat3<T> {
    let (sph, cph) = att.roll.sin_cos();
    let (sps, cps) = att.yaw.sin_cos();
    Mat3::from_rows([
        [cph * sps * lift, sph * sps * lift_slope, T::zero()],
        [-cph * cps * lift, -sph * cps * lift_slope, T::zero()],
        [-sph * lift, cph * lift_slope, T::zero()],
    ])
}

/// Drag contribution; only the pitch column is populated.
pub fn drag_effectiveness<T: Real>(att: &EulerAngles<T>, drag_slope: T) -> Mat3<T> {
    let (sps, cps) = att.yaw.sin_cos();
    Mat3::from_rows([
        [T::zero(), -cps * drag_slope, T::zero()],
        [T::zero(), sps * drag_slope, T::zero()],
        [T::zero(), T::zero(), T::zero()],
    ])
}

/// Summed effectiveness matrix at the given state. `alpha_model` is the AoA
/// the force curves are evaluated at (measured AoA or pitch, depending on the
/// configuration); the drag column is included only when `drag_term` is set.
pub fn full_effectiveness<T: Real>(
    att: &EulerAngles<T>,
    thrust: T,
    aero: &AeroModel<T>,
    alpha_model: T,
    airspeed: T,
    drag_term: bool,
) -> Mat3<T> {
    let lift = aero.lift_force(alpha_model, airspeed);
    let lift_slope = aero.lift_slope(alpha_model, airspeed);
    let mut g = thrust_effectiveness(att, thrust) + lift_effectiveness(att, lift, lift_slope);
    if drag_term {
        g = g + drag_effectiveness(att, aero.drag_slope(alpha_model, airspeed));
    }
    g
}

/// Force predicted by the simplified model the effectiveness matrices
/// linearize: thrust rotated body-to-NED, lift with its direction frozen
/// against pitch, drag along the horizontal axes, and AoA moving one-to-one
/// with pitch around the reference `(alpha_ref, pitch_ref)`.
pub fn predicted_force<T: Real>(
    att: &EulerAngles<T>,
    thrust: T,
    alpha_ref: T,
    pitch_ref: T,
    airspeed: T,
    aero: &AeroModel<T>,
    drag_term: bool,
) -> Vec3<T> {
    let alpha = alpha_ref + (att.pitch - pitch_ref);
    let lift = aero.lift_force(alpha, airspeed);
    let (sph, cph) = att.roll.sin_cos();
    let (sps, cps) = att.yaw.sin_cos();
    let mut f =
        thrust_force(att, thrust) + Vec3::new(sph * sps * lift, -sph * cps * lift, cph * lift);
    if drag_term {
        let drag = aero.drag_force(alpha, airspeed);
        f += Vec3::new(-cps * drag, sps * drag, T::zero());
    }
    f
}

/// Rows {x, y} × columns {roll, pitch} of the summed effectiveness matrix.
pub fn reduced_xy<T: Real>(full: &Mat3<T>) -> Mat2<T> {
    Mat2([
        [full.get(0, 0), full.get(0, 1)],
        [full.get(1, 0), full.get(1, 1)],
    ])
}

/// Rows {y, z} × columns {pitch, thrust} of the summed effectiveness matrix.
pub fn reduced_yz<T: Real>(full: &Mat3<T>) -> Mat2<T> {
    Mat2([
        [full.get(1, 1), full.get(1, 2)],
        [full.get(2, 1), full.get(2, 2)],
    ])
}

/// Alternative published closed form of the yz-reduced matrix; it differs
/// from [`reduced_yz`] by an extra drag-slope term in the z-row.
pub fn reduced_yz_published<T: Real>(
    att: &EulerAngles<T>,
    thrust: T,
    lift_slope: T,
    drag_slope: T,
) -> Mat2<T> {
    let (sph, cph) = att.roll.sin_cos();
    let (sth, cth) = att.pitch.sin_cos();
    let (sps, cps) = att.yaw.sin_cos();
    Mat2([
        [
            (-sth * sps + sph * cth * cps) * thrust - sph * cps * lift_slope + sps * drag_slope,
            cth * sps + sph * sth * cps,
        ],
        [
            -cph * cth * thrust + cph * lift_slope + sps * drag_slope,
            -cph * sth,
        ],
    ])
}

/// Pitch ceiling that keeps the predicted AoA at or below `alpha_max` under
/// one-to-one pitch/AoA tracking; never raises the command.
pub fn pitch_limit_for_alpha<T: Real>(pitch_cmd: T, alpha: T, pitch: T, alpha_max: T) -> T {
    pitch_cmd.min((alpha_max - alpha) + pitch)
}

/// Acceleration-increment demand: position/velocity feedback minus the
/// measured acceleration, clamped per axis.
pub fn desired_acceleration<T: Real>(
    reference: Vec3<T>,
    state: &SimState<T>,
    measured_accel: Vec3<T>,
    kp: Vec3<T>,
    kd: Vec3<T>,
    limit: T,
) -> Vec3<T> {
    let e = reference - state.position;
    let clamp = |v: T| v.max(-limit).min(limit);
    Vec3::new(
        clamp(kp.x * e.x - kd.x * state.velocity.x - measured_accel.x),
        clamp(kp.y * e.y - kd.y * state.velocity.y - measured_accel.y),
        clamp(kp.z * e.z - kd.z * state.velocity.z - measured_accel.z),
    )
}

/// Outer-loop controller instance; owns the acceleration filter memory.
#[derive(Clone, Debug)]
pub struct Controller<T> {
    pub cfg: ControllerConfig<T>,
    filtered_accel: Option<Vec3<T>>,
}

impl<T: Real> Controller<T> {
    pub fn new(cfg: ControllerConfig<T>) -> Self {
        Self {
            cfg,
            filtered_accel: None,
        }
    }

    pub fn reset(&mut self) {
        self.filtered_accel = None;
    }

    fn filter_accel(&mut self, accel: Vec3<T>, dt: T) -> Vec3<T> {
        match self.cfg.accel_filter_cutoff {
            None => accel,
            Some(cutoff) => {
                let gain = T::one() - (-T::of(2.0) * T::PI() * cutoff * dt).exp();
                let prev = self.filtered_accel.unwrap_or(accel);
                let next = prev + (accel - prev) * gain;
                self.filtered_accel = Some(next);
                next
            }
        }
    }

    /// One outer-loop step: build the demand, allocate, saturate, optionally
    /// fall back to the reduced allocation on thrust saturation, then apply
    /// the AoA pitch limiter. Re-engagement is automatic: every step restarts
    /// from the 3-axis allocation.
    pub fn step(
        &mut self,
        reference: Vec3<T>,
        state: &SimState<T>,
        air: &AirState<T>,
        aero: &AeroModel<T>,
        measured_accel: Vec3<T>,
        dt: T,
    ) -> ControlCommand<T> {
        let accel = self.filter_accel(measured_accel, dt);
        let cfg = &self.cfg;
        let desired =
            desired_acceleration(reference, state, accel, cfg.kp, cfg.kd, cfg.accel_limit);
        let demand = desired * aero.mass;

        let alpha_model = if cfg.aoa_in_effectiveness && air.alpha_valid {
            air.alpha
        } else {
            state.attitude.pitch
        };
        let g = full_effectiveness(
            &state.attitude,
            state.throttle,
            aero,
            alpha_model,
            air.airspeed,
            cfg.drag_term,
        );
        let du = allocate3(&g, demand, cfg.axis_weights, cfg.actuator_weights);
        // the reduced forms carry their drag entries regardless of the
        // 3-axis drag_term flag; they are fixed by the switching method
        let g_reduced_source = if cfg.drag_term {
            g
        } else {
            full_effectiveness(
                &state.attitude,
                state.throttle,
                aero,
                alpha_model,
                air.airspeed,
                true,
            )
        };

        let clamp_roll = |v: T| v.max(-cfg.roll_limit).min(cfg.roll_limit);
        let clamp_pitch = |v: T| v.max(cfg.pitch_min).min(cfg.pitch_max);

        let mut roll = clamp_roll(state.attitude.roll + du.x);
        let mut pitch = clamp_pitch(state.attitude.pitch + du.y);
        let thrust_candidate = state.throttle + du.z;
        let mut thrust = thrust_candidate.max(T::zero()).min(cfg.thrust_max);
        let mut mode = ControlMode::ThreeAxis;

        if cfg.switching && thrust_candidate <= cfg.thrust_switch_threshold {
            thrust = T::zero();
            match cfg.switch_axis {
                SwitchAxis::Xy => {
                    mode = ControlMode::ReducedXy;
                    let g2 = reduced_xy(&g_reduced_source);
                    let du2 = allocate2(
                        &g2,
                        [demand.x, demand.y],
                        [cfg.axis_weights.x, cfg.axis_weights.y],
                        [cfg.actuator_weights.x, cfg.actuator_weights.y],
                    );
                    roll = clamp_roll(state.attitude.roll + du2[0]);
                    pitch = clamp_pitch(state.attitude.pitch + du2[1]);
                }
                SwitchAxis::Yz => {
                    mode = ControlMode::ReducedYz;
                    let g2 = if cfg.yz_drag_in_z {
                        reduced_yz_published(
                            &state.attitude,
                            state.throttle,
                            aero.lift_slope(alpha_model, air.airspeed),
                            aero.drag_slope(alpha_model, air.airspeed),
                        )
                    } else {
                        reduced_yz(&g_reduced_source)
                    };
                    let du2 = allocate2(
                        &g2,
                        [demand.y, demand.z],
                        [cfg.axis_weights.y, cfg.axis_weights.z],
                        [cfg.actuator_weights.y, cfg.actuator_weights.z],
                    );
                    // roll is not part of the yz allocation; hold it
                    roll = clamp_roll(state.attitude.roll);
                    pitch = clamp_pitch(state.attitude.pitch + du2[0]);
                    // the thrust increment is computed but the command stays
                    // saturated at zero in reduced mode
                }
            }
        }

        if cfg.aoa_limit && air.alpha_valid {
            pitch = pitch_limit_for_alpha(pitch, air.alpha, state.attitude.pitch, cfg.alpha_max);
            pitch = pitch.max(cfg.pitch_min);
        }

        ControlCommand {
            roll,
            pitch,
            thrust,
            mode,
            desired_accel: desired,
            increments: du,
        }
    }
}

/// Roll-increment magnitudes for an identical state and pure-x force demand:
/// the 3-axis allocation versus the yz-reduced allocation at zero thrust. The
/// reduced allocation has no roll column, so its roll increment is
/// structurally zero; it is still evaluated for its pitch/thrust split.
pub fn roll_coupling_diagnostic<T: Real>(
    att: &EulerAngles<T>,
    alpha: T,
    airspeed: T,
    aero: &AeroModel<T>,
    cfg: &ControllerConfig<T>,
    demand_x: T,
) -> (T, T) {
    let g = full_effectiveness(att, T::zero(), aero, alpha, airspeed, cfg.drag_term);
    let demand = Vec3::new(demand_x, T::zero(), T::zero());
    let du3 = allocate3(&g, demand, cfg.axis_weights, cfg.actuator_weights);
    let g2 = reduced_yz(&g);
    let _du2 = allocate2(
        &g2,
        [T::zero(), T::zero()],
        [cfg.axis_weights.y, cfg.axis_weights.z],
        [cfg.actuator_weights.y, cfg.actuator_weights.z],
    );
    (du3.x.abs(), T::zero())
}
