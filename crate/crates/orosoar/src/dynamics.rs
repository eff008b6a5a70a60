//! Point-mass translational dynamics in NED with a first-order
//! attitude/throttle tracking model standing in for the inner loop, and
//! fixed-step RK4 integration.
//!
//! Yaw is slaved to the wind-facing heading each step; there are no yaw
//! dynamics. Terrain contact, attitude-envelope violations and non-finite
//! states terminate a run with a cause.

use serde::{Deserialize, Serialize};

use crate::aero::AeroModel;
use crate::math::{EulerAngles, Vec3};
use crate::windfield::{WindField, WindVector};
use crate::{standard_gravity, Real};

/// Airspeed below which the AoA measurement is flagged unreliable, m/s.
pub const DEFAULT_ALPHA_AIRSPEED_MIN: f64 = 1.0;

/// Full simulator state at one instant; the single source of truth per step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState<T> {
    /// Position in NED, m.
    pub position: Vec3<T>,
    /// Ground velocity in NED, m/s.
    pub velocity: Vec3<T>,
    pub attitude: EulerAngles<T>,
    /// Actual thrust produced by the motor, N.
    pub throttle: T,
    pub time: T,
}

impl<T: Real> SimState<T> {
    pub fn at_rest(position: Vec3<T>, yaw: T) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            attitude: EulerAngles::new(T::zero(), T::zero(), yaw),
            throttle: T::zero(),
            time: T::zero(),
        }
    }
}

/// Air-relative state derived from ground velocity, wind and attitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AirState<T> {
    pub airspeed: T,
    /// Angle of attack, rad.
    pub alpha: T,
    /// Sideslip, rad (near zero with the heading slaved to the wind).
    pub beta: T,
    /// Body-x air velocity is non-positive: flying backward through the air.
    pub reversed_flow: bool,
    /// False below the minimum airspeed for a trustworthy AoA measurement.
    pub alpha_valid: bool,
}

/// First-order attitude/throttle tracking standing in for the inner loop.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InnerLoopModel<T> {
    /// Attitude time constant, s.
    pub tau_attitude: T,
    /// Throttle time constant, s.
    pub tau_throttle: T,
    /// Attitude slew limit, rad/s.
    pub attitude_rate_limit: T,
    /// Motor saturation, N.
    pub thrust_max: T,
}

impl<T: Real> InnerLoopModel<T> {
    pub fn standard(thrust_max: T) -> Self {
        Self {
            tau_attitude: T::of(0.15),
            tau_throttle: T::of(0.1),
            attitude_rate_limit: T::of(120f64.to_radians()),
            thrust_max,
        }
    }
}

/// Attitude and throttle setpoints handed to the inner loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand<T> {
    pub roll: T,
    pub pitch: T,
    pub thrust: T,
}

/// Why a simulation step refused to continue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// |roll| or |pitch| reached 90°.
    AttitudeEnvelope,
    /// Position fell below the terrain surface.
    TerrainContact,
    /// A state component became NaN or infinite.
    NonFinite,
}

/// Air-relative state from ground velocity, wind and attitude, with the given
/// minimum airspeed for a valid AoA measurement.
pub fn air_state_with_threshold<T: Real>(
    velocity: Vec3<T>,
    attitude: &EulerAngles<T>,
    wind: WindVector<T>,
    alpha_airspeed_min: T,
) -> AirState<T> {
    let v_air = velocity - wind.as_vec3();
    let airspeed = v_air.norm();
    let body = attitude.ned_to_body().mul_vec(v_air);
    let alpha = body.z.atan2(body.x);
    let beta = if airspeed > T::zero() {
        (body.y / airspeed).min(T::one()).max(-T::one()).asin()
    } else {
        T::zero()
    };
    AirState {
        airspeed,
        alpha,
        beta,
        reversed_flow: body.x <= T::zero(),
        alpha_valid: airspeed >= alpha_airspeed_min,
    }
}

/// Air-relative state with the default AoA-validity threshold.
pub fn air_state<T: Real>(state: &SimState<T>, wind: WindVector<T>) -> AirState<T> {
    air_state_with_threshold(
        state.velocity,
        &state.attitude,
        wind,
        T::of(DEFAULT_ALPHA_AIRSPEED_MIN),
    )
}

/// Heading that faces into the wind (direction of `-wind`), or `None` for a
/// near-vertical wind vector.
pub fn wind_facing_heading<T: Real>(wind: WindVector<T>) -> Option<T> {
    if wind.horizontal_speed() < T::of(1e-6) {
        None
    } else {
        Some((-wind.v).atan2(-wind.u))
    }
}

/// Thrust force in NED: body-x thrust rotated through the attitude.
pub fn thrust_force<T: Real>(attitude: &EulerAngles<T>, thrust: T) -> Vec3<T> {
    attitude
        .body_to_ned()
        .mul_vec(Vec3::new(thrust, T::zero(), T::zero()))
}

fn aero_force<T: Real>(
    velocity: Vec3<T>,
    attitude: &EulerAngles<T>,
    aero: &AeroModel<T>,
    wind: WindVector<T>,
) -> Vec3<T> {
    let v_air = velocity - wind.as_vec3();
    let airspeed = v_air.norm();
    let Some(v_hat) = v_air.normalized(T::of(1e-9)) else {
        return Vec3::zeros();
    };
    let air = air_state_with_threshold(velocity, attitude, wind, T::of(DEFAULT_ALPHA_AIRSPEED_MIN));
    let q_s = aero.dynamic_pressure(airspeed) * aero.wing_area;
    let lift_mag = q_s * aero.cl(air.alpha);
    let drag_mag = q_s * aero.cd(air.alpha);

    // lateral unit perpendicular to the air-relative velocity
    let down = Vec3::new(T::zero(), T::zero(), T::one());
    let lateral = match v_hat.cross(down).normalized(T::of(1e-6)) {
        Some(j) => j,
        None => {
            // near-vertical relative flow: fall back to the body y-axis
            let body_y = attitude
                .body_to_ned()
                .mul_vec(Vec3::new(T::zero(), T::one(), T::zero()));
            let ortho = body_y - v_hat * v_hat.dot(body_y);
            ortho
                .normalized(T::of(1e-9))
                .unwrap_or(Vec3::new(T::zero(), T::one(), T::zero()))
        }
    };
    // lift is perpendicular to the relative flow, banked about it by roll
    let lift_up = v_hat.cross(lateral);
    let (sin_roll, cos_roll) = attitude.roll.sin_cos();
    let lift_dir = lift_up * cos_roll - lateral * sin_roll;
    // drag opposes the motion through the air
    lift_dir * lift_mag - v_hat * drag_mag
}

/// Translational acceleration: gravity, thrust (body-x rotated to NED), and
/// the aerodynamic force at the current air-relative state.
pub fn total_acceleration<T: Real>(
    state: &SimState<T>,
    aero: &AeroModel<T>,
    wind: WindVector<T>,
) -> Vec3<T> {
    acceleration_at(state.velocity, &state.attitude, state.throttle, aero, wind)
}

fn acceleration_at<T: Real>(
    velocity: Vec3<T>,
    attitude: &EulerAngles<T>,
    throttle: T,
    aero: &AeroModel<T>,
    wind: WindVector<T>,
) -> Vec3<T> {
    let gravity = Vec3::new(T::zero(), T::zero(), standard_gravity::<T>());
    let forces = thrust_force(attitude, throttle) + aero_force(velocity, attitude, aero, wind);
    gravity + forces / aero.mass
}

fn first_order_step<T: Real>(current: T, target: T, tau: T, dt: T, rate_limit: Option<T>) -> T {
    let gain = T::one() - (-dt / tau).exp();
    let mut delta = (target - current) * gain;
    if let Some(limit) = rate_limit {
        let max_delta = limit * dt;
        delta = delta.max(-max_delta).min(max_delta);
    }
    current + delta
}

/// Advances the state by `dt`: actuators track their commands as rate-limited
/// first-order lags, then the translational state is integrated with RK4,
/// sampling the wind at each stage position. Deterministic.
pub fn step<T: Real>(
    state: &SimState<T>,
    command: &ActuatorCommand<T>,
    field: &WindField<T>,
    aero: &AeroModel<T>,
    inner: &InnerLoopModel<T>,
    dt: T,
) -> Result<SimState<T>, Termination> {
    assert!(
        dt > T::zero() && dt <= T::of(0.05),
        "step size must lie in (0, 0.05] s"
    );

    let roll = first_order_step(
        state.attitude.roll,
        command.roll,
        inner.tau_attitude,
        dt,
        Some(inner.attitude_rate_limit),
    );
    let pitch = first_order_step(
        state.attitude.pitch,
        command.pitch,
        inner.tau_attitude,
        dt,
        Some(inner.attitude_rate_limit),
    );
    let wind_here = field.wind_at(state.position).wind;
    let yaw = wind_facing_heading(wind_here).unwrap_or(state.attitude.yaw);
    let attitude = EulerAngles::new(roll, pitch, yaw);

    let throttle = first_order_step(state.throttle, command.thrust, inner.tau_throttle, dt, None)
        .max(T::zero())
        .min(inner.thrust_max);

    let deriv = |pos: Vec3<T>, vel: Vec3<T>| -> (Vec3<T>, Vec3<T>) {
        let wind = field.wind_at(pos).wind;
        (vel, acceleration_at(vel, &attitude, throttle, aero, wind))
    };

    let half = T::of(0.5);
    let sixth = T::of(1.0 / 6.0);
    let two = T::of(2.0);
    let (p0, v0) = (state.position, state.velocity);
    let (k1p, k1v) = deriv(p0, v0);
    let (k2p, k2v) = deriv(p0 + k1p * (dt * half), v0 + k1v * (dt * half));
    let (k3p, k3v) = deriv(p0 + k2p * (dt * half), v0 + k2v * (dt * half));
    let (k4p, k4v) = deriv(p0 + k3p * dt, v0 + k3v * dt);
    let position = p0 + (k1p + k2p * two + k3p * two + k4p) * (dt * sixth);
    let velocity = v0 + (k1v + k2v * two + k3v * two + k4v) * (dt * sixth);

    let next = SimState {
        position,
        velocity,
        attitude,
        throttle,
        time: state.time + dt,
    };

    if !next.position.is_finite() || !next.velocity.is_finite() || !next.attitude.is_finite() {
        return Err(Termination::NonFinite);
    }
    if next.attitude.roll.abs() >= T::FRAC_PI_2() || next.attitude.pitch.abs() >= T::FRAC_PI_2() {
        return Err(Termination::AttitudeEnvelope);
    }
    let altitude = -next.position.z;
    if altitude <= field.terrain_height(next.position.x, next.position.y) {
        return Err(Termination::TerrainContact);
    }
    Ok(next)
}
