"""Reference scenarios shipped with the package."""

from __future__ import annotations

from .circuit import MacScenario

REGION_SCENARIOS: dict[str, MacScenario] = {
    "microwave-unequal-eta": MacScenario((1 / 3, 2 / 3), 0.01, 20.0, (0.01, 0.01)),
    "microwave-unequal-brightness": MacScenario((0.5, 0.5), 0.01, 20.0, (0.001, 0.01)),
    "noisy-unequal-brightness": MacScenario((0.5, 0.5), 1e-3, 1e4, (0.001, 0.01)),
    "infrared-unequal-brightness": MacScenario((0.5, 0.5), 1e-3, 0.1, (0.001, 0.01)),
    "microwave-three-sender": MacScenario((1 / 3, 1 / 3, 1 / 3), 0.01, 20.0, (0.1, 0.1, 0.01)),
}

# (scenario, repetitions per BPSK symbol)
RECEIVER_SCENARIOS: dict[str, tuple[MacScenario, int]] = {
    "microwave-receiver": (MacScenario((0.5, 0.5), 0.01, 20.0, (0.01, 0.01)), 20_000),
    "noisy-receiver": (MacScenario((0.5, 0.5), 1e-3, 1e4, (1e-3, 1e-3)), 10_000_000),
}


def snr_repetitions(tau: float, n_s: float, n_b: float, snr: float = 0.1) -> int:
    """Repetitions ``N_R`` with ``N_R tau N_S / N_B = snr``."""
    return max(1, round(snr * n_b / (tau * n_s)))
