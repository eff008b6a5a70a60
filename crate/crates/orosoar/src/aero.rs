//! Aerodynamic force model: stall-capable lift curve, drag polar, and the
//! signed force/slope quantities consumed by the dynamics and the controller
//! effectiveness matrices.
//!
//! Sign conventions (NED, z down):
//! - `lift_force` is negative for positive CL, so that its z-contribution
//!   `cos(roll) * L` accelerates the aircraft upward.
//! - `drag_force` is the positive drag magnitude `½ρV²S·CD`.

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::{standard_gravity, Real};

/// Lift coefficient curve: linear below `linear_end`, then a C1 Hermite spline
/// through the stall peak at `alpha_stall` and the post-stall decay knots.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftCurve<T> {
    /// CL at zero angle of attack.
    pub cl0: T,
    /// Linear-region slope, 1/rad.
    pub cl_alpha: T,
    /// AoA where the linear region hands over to the stall spline, rad.
    pub linear_end: T,
    /// Critical AoA (curve maximum), rad.
    pub alpha_stall: T,
    /// CL at the stall peak.
    pub cl_max: T,
    /// Post-stall knots `(alpha, CL)`, strictly increasing in alpha and
    /// decreasing in CL. The last knot ends the valid range.
    pub post_stall: Vec<(T, T)>,
    /// Low end of the valid AoA range, rad.
    pub alpha_min: T,
}

/// Drag polar: `CD = cd0 + k_induced·CL² (+ post-stall rise beyond the peak)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DragCurve<T> {
    pub cd0: T,
    pub k_induced: T,
    /// CD rise per radian of AoA past the stall peak; large enough to keep CD
    /// growing while the induced term shrinks with the collapsing CL.
    pub post_stall_rise: T,
}

/// Point-mass airframe: inertia, geometry, air density and coefficient curves.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AeroModel<T> {
    /// Vehicle mass, kg.
    pub mass: T,
    /// Wing reference area, m².
    pub wing_area: T,
    /// Air density, kg/m³.
    pub air_density: T,
    pub lift: LiftCurve<T>,
    pub drag: DragCurve<T>,
    /// Operational AoA ceiling for the pitch limiter, rad (≤ `alpha_stall`).
    pub alpha_max: T,
}

/// Cubic Hermite on `[x0, x1]` with endpoint values/slopes; returns (value, slope).
fn hermite<T: Real>(x: T, x0: T, x1: T, y0: T, y1: T, d0: T, d1: T) -> (T, T) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let two = T::of(2.0);
    let three = T::of(3.0);
    let four = T::of(4.0);
    let six = T::of(6.0);
    let value = (two * t3 - three * t2 + T::one()) * y0
        + (t3 - two * t2 + t) * h * d0
        + (-two * t3 + three * t2) * y1
        + (t3 - t2) * h * d1;
    let slope = (six * t2 - six * t) * (y0 - y1) / h
        + (three * t2 - four * t + T::one()) * d0
        + (three * t2 - two * t) * d1;
    (value, slope)
}

impl<T: Real> LiftCurve<T> {
    /// Valid AoA range `[alpha_min, last knot]`.
    pub fn valid_range(&self) -> (T, T) {
        let hi = self
            .post_stall
            .last()
            .map(|&(a, _)| a)
            .unwrap_or(self.alpha_stall);
        (self.alpha_min, hi)
    }

    /// Clamps `alpha` into the valid range; the flag reports whether clamping occurred.
    pub fn clamp_alpha(&self, alpha: T) -> (T, bool) {
        let (lo, hi) = self.valid_range();
        if alpha < lo {
            (lo, true)
        } else if alpha > hi {
            (hi, true)
        } else {
            (alpha, false)
        }
    }

    fn cl_at_linear_end(&self) -> T {
        self.cl0 + self.cl_alpha * self.linear_end
    }

    /// Monotone-preserving slopes for the post-stall knot chain, with zero
    /// slope at the stall peak.
    fn post_stall_slopes(&self) -> Vec<T> {
        let mut pts = Vec::with_capacity(self.post_stall.len() + 1);
        pts.push((self.alpha_stall, self.cl_max));
        pts.extend(self.post_stall.iter().copied());
        let n = pts.len();
        let mut slopes = vec![T::zero(); n];
        if n < 2 {
            return slopes;
        }
        let secant = |i: usize| (pts[i + 1].1 - pts[i].1) / (pts[i + 1].0 - pts[i].0);
        for i in 1..n - 1 {
            let a = secant(i - 1);
            let b = secant(i);
            slopes[i] = if a * b > T::zero() {
                T::of(2.0) * a * b / (a + b)
            } else {
                T::zero()
            };
        }
        slopes[n - 1] = secant(n - 2);
        slopes[0] = T::zero();
        slopes
    }

    /// (CL, dCL/dα) at `alpha` (already clamped by the caller).
    fn eval(&self, alpha: T) -> (T, T) {
        if alpha <= self.linear_end {
            return (self.cl0 + self.cl_alpha * alpha, self.cl_alpha);
        }
        if alpha <= self.alpha_stall {
            return hermite(
                alpha,
                self.linear_end,
                self.alpha_stall,
                self.cl_at_linear_end(),
                self.cl_max,
                self.cl_alpha,
                T::zero(),
            );
        }
        let mut pts = vec![(self.alpha_stall, self.cl_max)];
        pts.extend(self.post_stall.iter().copied());
        let slopes = self.post_stall_slopes();
        for i in 0..pts.len() - 1 {
            if alpha <= pts[i + 1].0 {
                return hermite(
                    alpha,
                    pts[i].0,
                    pts[i + 1].0,
                    pts[i].1,
                    pts[i + 1].1,
                    slopes[i],
                    slopes[i + 1],
                );
            }
        }
        let last = *pts.last().expect("non-empty knots");
        (last.1, *slopes.last().expect("non-empty knots"))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::invalid(format!("lift curve: {msg}")));
        if !(self.linear_end < self.alpha_stall) {
            return bad("linear_end must lie below alpha_stall");
        }
        if !(self.alpha_min < self.linear_end) {
            return bad("alpha_min must lie below linear_end");
        }
        let cl_j = self.cl_at_linear_end();
        if !(self.cl_max > cl_j) {
            return bad("cl_max must exceed the linear-region value at linear_end");
        }
        // Fritsch-Carlson monotonicity bound for the rising Hermite segment.
        let secant = (self.cl_max - cl_j) / (self.alpha_stall - self.linear_end);
        if self.cl_alpha > T::of(3.0) * secant {
            return bad("rising stall segment would overshoot (cl_alpha > 3x secant)");
        }
        if self.post_stall.is_empty() {
            return bad("at least one post-stall knot required");
        }
        let mut prev = (self.alpha_stall, self.cl_max);
        for &(a, cl) in &self.post_stall {
            if !(a > prev.0) {
                return bad("post-stall knot alphas must be strictly increasing");
            }
            if !(cl < prev.1) {
                return bad("post-stall knot CL values must be strictly decreasing");
            }
            prev = (a, cl);
        }
        Ok(())
    }
}

impl<T: Real> DragCurve<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cd0 <= T::zero() {
            return Err(ConfigError::invalid("drag curve: cd0 must be positive"));
        }
        if self.k_induced < T::zero() || self.post_stall_rise < T::zero() {
            return Err(ConfigError::invalid(
                "drag curve: k_induced and post_stall_rise must be non-negative",
            ));
        }
        Ok(())
    }
}

impl<T: Real> AeroModel<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mass <= T::zero() || self.wing_area <= T::zero() || self.air_density <= T::zero() {
            return Err(ConfigError::invalid(
                "aero model: mass, wing_area and air_density must be positive",
            ));
        }
        self.lift.validate()?;
        self.drag.validate()?;
        if self.alpha_max > self.lift.alpha_stall {
            return Err(ConfigError::invalid(
                "aero model: alpha_max must not exceed alpha_stall",
            ));
        }
        Ok(())
    }

    /// Lift coefficient at `alpha`, clamped to the valid range.
    pub fn cl(&self, alpha: T) -> T {
        let (a, _) = self.lift.clamp_alpha(alpha);
        self.lift.eval(a).0
    }

    /// dCL/dα at `alpha` (zero outside the valid range).
    pub fn cl_slope(&self, alpha: T) -> T {
        let (a, clamped) = self.lift.clamp_alpha(alpha);
        if clamped {
            T::zero()
        } else {
            self.lift.eval(a).1
        }
    }

    /// Drag coefficient at `alpha`, clamped to the valid range.
    pub fn cd(&self, alpha: T) -> T {
        let (a, _) = self.lift.clamp_alpha(alpha);
        let cl = self.lift.eval(a).0;
        let mut cd = self.drag.cd0 + self.drag.k_induced * cl * cl;
        if a > self.lift.alpha_stall {
            cd += self.drag.post_stall_rise * (a - self.lift.alpha_stall);
        }
        cd
    }

    /// dCD/dα at `alpha` (zero outside the valid range).
    pub fn cd_slope(&self, alpha: T) -> T {
        let (a, clamped) = self.lift.clamp_alpha(alpha);
        if clamped {
            return T::zero();
        }
        let (cl, cl_d) = self.lift.eval(a);
        let mut slope = T::of(2.0) * self.drag.k_induced * cl * cl_d;
        if a > self.lift.alpha_stall {
            slope += self.drag.post_stall_rise;
        }
        slope
    }

    /// Dynamic pressure `½ρV²`.
    pub fn dynamic_pressure(&self, airspeed: T) -> T {
        T::of(0.5) * self.air_density * airspeed * airspeed
    }

    /// Signed lift `L(α,V) = −½ρV²S·CL(α)`; negative for positive CL so that
    /// the NED z-component `cos(roll)·L` points upward.
    pub fn lift_force(&self, alpha: T, airspeed: T) -> T {
        -self.dynamic_pressure(airspeed) * self.wing_area * self.cl(alpha)
    }

    /// Drag magnitude `D(α,V) = ½ρV²S·CD(α) ≥ 0`.
    pub fn drag_force(&self, alpha: T, airspeed: T) -> T {
        self.dynamic_pressure(airspeed) * self.wing_area * self.cd(alpha)
    }

    /// `∂L/∂α`, N/rad. Negative (more upward force per AoA) below stall,
    /// changes sign past the peak.
    pub fn lift_slope(&self, alpha: T, airspeed: T) -> T {
        -self.dynamic_pressure(airspeed) * self.wing_area * self.cl_slope(alpha)
    }

    /// `∂D/∂α`, N/rad.
    pub fn drag_slope(&self, alpha: T, airspeed: T) -> T {
        self.dynamic_pressure(airspeed) * self.wing_area * self.cd_slope(alpha)
    }

    /// AoA on the pre-stall branch where lift balances weight at `airspeed`;
    /// `None` when the required CL is outside the achievable range.
    pub fn trim_alpha(&self, airspeed: T) -> Option<T> {
        let q = self.dynamic_pressure(airspeed);
        if q <= T::zero() {
            return None;
        }
        let cl_needed = self.mass * standard_gravity::<T>() / (q * self.wing_area);
        let lo = self.lift.alpha_min;
        let hi = self.lift.alpha_stall;
        let cl_lo = self.cl(lo);
        if cl_needed > self.lift.cl_max || cl_needed < cl_lo {
            return None;
        }
        let mut a = lo;
        let mut b = hi;
        for _ in 0..80 {
            let mid = (a + b) * T::of(0.5);
            if self.cl(mid) < cl_needed {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some((a + b) * T::of(0.5))
    }

    /// Steady gliding sink rate at `airspeed`: `V·CD/CL` at the trim AoA.
    /// `None` when the aircraft cannot trim at that airspeed.
    pub fn sink_rate(&self, airspeed: T) -> Option<T> {
        let alpha = self.trim_alpha(airspeed)?;
        let cl = self.cl(alpha);
        if cl <= T::zero() {
            return None;
        }
        Some(airspeed * self.cd(alpha) / cl)
    }

    /// Smallest airspeed at which the aircraft can trim (lift = weight at the
    /// stall peak).
    pub fn min_trim_airspeed(&self) -> T {
        let num = T::of(2.0) * self.mass * standard_gravity::<T>();
        (num / (self.air_density * self.wing_area * self.lift.cl_max)).sqrt()
    }

    /// 1100 mm wingspan, 716 g motor glider. Coefficient curves are
    /// calibration values typical of a cambered low-Reynolds airfoil, not
    /// measured data.
    pub fn eclipson_c() -> Self {
        let deg = |d: f64| T::of(d.to_radians());
        Self {
            mass: T::of(0.716),
            wing_area: T::of(0.18),
            air_density: T::of(1.225),
            lift: LiftCurve {
                cl0: T::of(0.4),
                cl_alpha: T::of(5.0),
                linear_end: deg(9.0),
                alpha_stall: deg(12.0),
                cl_max: T::of(1.40),
                post_stall: vec![
                    (deg(14.0), T::of(1.33)),
                    (deg(17.0), T::of(1.16)),
                    (deg(21.0), T::of(1.00)),
                    (deg(26.0), T::of(0.92)),
                ],
                alpha_min: deg(-6.0),
            },
            drag: DragCurve {
                cd0: T::of(0.025),
                k_induced: T::of(0.06),
                post_stall_rise: T::of(2.0),
            },
            alpha_max: deg(12.0),
        }
    }

    /// 1500 mm wingspan, 1210 g Seal G1500. Calibration curves as above.
    pub fn seal_g1500() -> Self {
        let deg = |d: f64| T::of(d.to_radians());
        Self {
            mass: T::of(1.21),
            wing_area: T::of(0.257),
            air_density: T::of(1.225),
            lift: LiftCurve {
                cl0: T::of(0.35),
                cl_alpha: T::of(4.8),
                linear_end: deg(10.0),
                alpha_stall: deg(13.0),
                cl_max: T::of(1.42),
                post_stall: vec![
                    (deg(15.0), T::of(1.35)),
                    (deg(18.0), T::of(1.18)),
                    (deg(22.0), T::of(1.02)),
                    (deg(27.0), T::of(0.93)),
                ],
                alpha_min: deg(-6.0),
            },
            drag: DragCurve {
                cd0: T::of(0.028),
                k_induced: T::of(0.046),
                post_stall_rise: T::of(2.0),
            },
            alpha_max: deg(13.0),
        }
    }
}
