"""Target motion, distance-dependent sensing, and the information filter.

The filter is the inverse-covariance form of the Kalman filter: the state is
an information vector and an information matrix, and fused multi-sensor
updates are plain sums of per-sensor increments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


# Sensing quality degrades with range; closer than this the model is clamped
# to avoid an unbounded information weight.
MIN_SENSING_DISTANCE = 1.0


@dataclass(frozen=True)
class SensorModel:
    """Linear position observation with range-dependent noise.

    Measurement noise covariance at distance d is ``coeff * d**path_loss``;
    ``coeff`` must be diagonal positive definite.
    """

    obs: np.ndarray          # (k, state_dim) observation matrix
    coeff: np.ndarray        # (k, k) diagonal distance-independent coefficient
    path_loss: float

    def __post_init__(self) -> None:
        obs = np.asarray(self.obs, dtype=float)
        coeff = np.asarray(self.coeff, dtype=float)
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "coeff", coeff)
        if not np.allclose(coeff, np.diag(np.diag(coeff))):
            raise ValueError("noise coefficient must be diagonal")
        if np.any(np.diag(coeff) <= 0):
            raise ValueError("noise coefficient must be positive definite")


def default_sensor_model(path_loss: float = 2.0) -> SensorModel:
    """Planar position sensor: unit observation rows, 1e-6 noise coefficient."""
    obs = np.array([[1.0, 0.0, 0.0, 0.0],
                    [0.0, 1.0, 0.0, 0.0]])
    return SensorModel(obs=obs, coeff=1e-6 * np.eye(2), path_loss=path_loss)


def constant_velocity_transition() -> np.ndarray:
    """Unit-step constant-velocity state transition for [x, y, vx, vy]."""
    f = np.eye(4)
    f[0, 2] = 1.0
    f[1, 3] = 1.0
    return f


def default_process_noise() -> np.ndarray:
    return np.diag([2.0, 2.0, 0.04, 0.04])


def target_step(state: np.ndarray, transition: np.ndarray,
                process_noise: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Advance the true target state one interval with seeded Gaussian noise."""
    state = np.asarray(state, dtype=float)
    mean = transition @ state
    if np.any(process_noise):
        noise = np.linalg.cholesky(process_noise) @ rng.standard_normal(state.shape[0])
        return mean + noise
    return mean


def measurement_noise_cov(model: SensorModel, distance: float) -> np.ndarray:
    """Noise covariance at the given sensor-target distance."""
    if distance <= 0:
        raise ValueError("sensing distance must be positive")
    return model.coeff * distance ** model.path_loss


def log_information_weights(model: SensorModel) -> tuple[float, float]:
    """Coefficients (offset, scale) so that a single sensor at distance d
    contributes ``offset - scale * path_loss * ln(d)``.

    Derived from tr{obs^T ln(R^-1) obs} with diagonal R = coeff * d**path_loss.
    """
    w = np.diag(model.obs @ model.obs.T)
    offset = float(-(w * np.log(np.diag(model.coeff))).sum())
    return offset, float(w.sum())


def info_contribution(distances: list[float] | np.ndarray,
                      model: SensorModel) -> float:
    """Summed log-information weight of a set of sensors.

    Each sensor contributes the trace of ``obs^T ln(R^-1) obs`` where the
    matrix logarithm is taken elementwise on the diagonal inverse noise.
    Negative per-sensor terms (noise variance above one) are kept as-is.
    """
    offset, scale = log_information_weights(model)
    total = 0.0
    for d in np.atleast_1d(np.asarray(distances, dtype=float)):
        if d <= 0:
            raise ValueError("sensing distance must be positive")
        total += offset - scale * model.path_loss * float(np.log(d))
    return total


@dataclass(frozen=True)
class FilterState:
    """Information-form filter state: info vector and info matrix."""

    info_vector: np.ndarray   # (dim,)
    info_matrix: np.ndarray   # (dim, dim), symmetric positive definite

    def __post_init__(self) -> None:
        v = np.asarray(self.info_vector, dtype=float)
        q = np.asarray(self.info_matrix, dtype=float)
        object.__setattr__(self, "info_vector", v)
        object.__setattr__(self, "info_matrix", q)
        if not np.allclose(q, q.T, atol=1e-9):
            raise ValueError("information matrix must be symmetric")
        if np.any(np.linalg.eigvalsh((q + q.T) / 2) <= 0):
            raise ValueError("information matrix must be positive definite")

    def estimate(self) -> np.ndarray:
        """Recover the state estimate from the information pair."""
        return np.linalg.solve(self.info_matrix, self.info_vector)


def initial_filter_state(dim: int = 4) -> FilterState:
    return FilterState(info_vector=np.zeros(dim), info_matrix=np.eye(dim))


def filter_predict(state: FilterState, transition: np.ndarray,
                   process_noise: np.ndarray) -> FilterState:
    """Time update in information form.

    Singular matrices raise numpy.linalg.LinAlgError; they are not masked.
    """
    cov = np.linalg.inv(state.info_matrix)
    predicted_cov = transition @ cov @ transition.T + process_noise
    info = np.linalg.inv(predicted_cov)
    info = (info + info.T) / 2
    vector = info @ transition @ cov @ state.info_vector
    return FilterState(info_vector=vector, info_matrix=info)


def filter_update_multi(state: FilterState,
                        measurements: list[tuple[np.ndarray, np.ndarray]],
                        model: SensorModel) -> FilterState:
    """Fused measurement update: add every sensor's information increment.

    ``measurements`` holds (measurement vector, noise covariance) pairs; the
    noise covariance is the sensor's own distance-dependent one.
    """
    vector = state.info_vector.copy()
    info = state.info_matrix.copy()
    for z, noise_cov in measurements:
        gain = model.obs.T @ np.linalg.inv(noise_cov)
        vector = vector + gain @ np.asarray(z, dtype=float)
        info = info + gain @ model.obs
    return FilterState(info_vector=vector, info_matrix=(info + info.T) / 2)
