"""Shared fixtures: the solved reference profile and acceptance bookkeeping."""

import numpy as np
import pytest

from blowuplab import corrector, energy

# criterion number -> (label, passed); filled by test_acceptance.py
ACCEPTANCE = {}


def record_criterion(num: int, label: str, passed: bool) -> None:
    ACCEPTANCE[num] = (label, bool(passed))


@pytest.fixture(scope="session")
def reference_profile():
    """n = 7 corrector on the default grid; solved once per session."""
    return corrector.solve_corrector(7)


@pytest.fixture(scope="session")
def fine_profile():
    """Fine-grid solve used by the pairing-agreement acceptance check."""
    return corrector.solve_corrector(
        7, corrector.GridSpec(dr=0.006, dt=0.006))


@pytest.fixture(scope="session")
def reference_coefficients(reference_profile):
    pairing = corrector.pairing_per_unit_norm(reference_profile)
    return energy.coefficients(7, pairing_per_unit_norm=pairing)


@pytest.fixture(scope="session")
def residual_report(reference_profile):
    """Default residual-order sweep; shared by unit and acceptance tests."""
    from blowuplab import FermiMetricJet, TracelessSymmetricForm, \
        ansatz_residual_orders
    h = TracelessSymmetricForm.from_diagonal(7, [1.0, -1.0, 0, 0, 0, 0])
    return ansatz_residual_orders(FermiMetricJet.shape_only(h),
                                  reference_profile)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240815)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        label, ok = ACCEPTANCE[num]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num} [{verdict}] {label}")
