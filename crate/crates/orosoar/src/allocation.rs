//! Weighted least-squares control allocation.
//!
//! Maps a force demand to actuator increments by minimizing
//! `‖Wa^{1/2}(G·du − demand)‖² + ‖Wu^{1/2}·du‖²` through the regularized
//! normal equations. Positive actuator regularizers keep the problem
//! well-posed even for rank-deficient effectiveness matrices.

use crate::math::{Mat2, Mat3, Vec3};
use crate::Real;

/// 3-actuator allocation. `demand` is the force demand (mass times the
/// acceleration increment), `axis_weights` the per-axis priorities and
/// `actuator_weights` the per-actuator regularizers (all positive).
pub fn allocate3<T: Real>(
    effectiveness: &Mat3<T>,
    demand: Vec3<T>,
    axis_weights: Vec3<T>,
    actuator_weights: Vec3<T>,
) -> Vec3<T> {
    let g = &effectiveness.0;
    let wa = [axis_weights.x, axis_weights.y, axis_weights.z];
    let wu = [actuator_weights.x, actuator_weights.y, actuator_weights.z];
    let d = [demand.x, demand.y, demand.z];

    // H = GᵀWaG + Wu, b = GᵀWa·demand
    let mut h = Mat3::zeros();
    let mut b = [T::zero(); 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = T::zero();
            for k in 0..3 {
                acc += g[k][i] * wa[k] * g[k][j];
            }
            if i == j {
                acc += wu[i];
            }
            h.0[i][j] = acc;
        }
        let mut acc = T::zero();
        for k in 0..3 {
            acc += g[k][i] * wa[k] * d[k];
        }
        b[i] = acc;
    }
    h.solve(Vec3::new(b[0], b[1], b[2]))
        .unwrap_or_else(Vec3::zeros)
}

/// 2-actuator allocation over a reduced effectiveness matrix.
pub fn allocate2<T: Real>(
    effectiveness: &Mat2<T>,
    demand: [T; 2],
    axis_weights: [T; 2],
    actuator_weights: [T; 2],
) -> [T; 2] {
    let g = &effectiveness.0;
    let mut h = Mat2::zeros();
    let mut b = [T::zero(); 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = T::zero();
            for k in 0..2 {
                acc += g[k][i] * axis_weights[k] * g[k][j];
            }
            if i == j {
                acc += actuator_weights[i];
            }
            h.0[i][j] = acc;
        }
        let mut acc = T::zero();
        for k in 0..2 {
            acc += g[k][i] * axis_weights[k] * demand[k];
        }
        b[i] = acc;
    }
    h.solve(b).unwrap_or([T::zero(); 2])
}

/// Objective value `‖Wa^{1/2}(G·du − demand)‖² + ‖Wu^{1/2}·du‖²` for a
/// candidate increment; used by optimality tests.
pub fn objective3<T: Real>(
    effectiveness: &Mat3<T>,
    demand: Vec3<T>,
    axis_weights: Vec3<T>,
    actuator_weights: Vec3<T>,
    du: Vec3<T>,
) -> T {
    let r = effectiveness.mul_vec(du) - demand;
    axis_weights.x * r.x * r.x
        + axis_weights.y * r.y * r.y
        + axis_weights.z * r.z * r.z
        + actuator_weights.x * du.x * du.x
        + actuator_weights.y * du.y * du.y
        + actuator_weights.z * du.z * du.z
}

/// Residual of the regularized normal equations at `du`; zero at the optimum.
pub fn normal_equation_residual3<T: Real>(
    effectiveness: &Mat3<T>,
    demand: Vec3<T>,
    axis_weights: Vec3<T>,
    actuator_weights: Vec3<T>,
    du: Vec3<T>,
) -> T {
    let g = &effectiveness.0;
    let wa = [axis_weights.x, axis_weights.y, axis_weights.z];
    let wu = [actuator_weights.x, actuator_weights.y, actuator_weights.z];
    let gdu = effectiveness.mul_vec(du);
    let r = [gdu.x - demand.x, gdu.y - demand.y, gdu.z - demand.z];
    let du_arr = [du.x, du.y, du.z];
    let mut norm = T::zero();
    for i in 0..3 {
        let mut acc = wu[i] * du_arr[i];
        for k in 0..3 {
            acc += g[k][i] * wa[k] * r[k];
        }
        norm += acc * acc;
    }
    norm.sqrt()
}
