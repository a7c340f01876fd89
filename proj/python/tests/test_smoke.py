# Copyright 2026 The koopctl Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# */

import math

import numpy as np
import pytest

import koopctl

FAST = {
    "koopman.cutoffs": "16 16",
    "koopman.dt": "1e-3",
    "hjb.spacing": "0.05",
    "hjb.dt": "2.5e-4",
    "hjb.substeps": "1",
    "sim.duration": "0.05",
    "sim.dt": "1e-3",
    "fk.dt": "1e-3",
}


@pytest.fixture(scope="module")
def config():
    return koopctl.Config.from_preset("vdp", FAST)


def test_preset_lambda(config):
    assert config.lam == pytest.approx(0.25, abs=1e-12)
    assert config.dim == 2
    assert config.to_text().startswith("# expanded from preset vdp")


def test_koopman_solution(config):
    sol = koopctl.solve_koopman(config)
    coeffs = sol.coefficients
    assert coeffs.shape == (16, 16, 2)
    assert np.all(np.isfinite(coeffs))
    psi = sol.psi([0.0, 0.0])
    assert 0.0 < psi < 1.0
    u = sol.control([0.0, 0.0])
    assert u.shape == (2,)
    assert u[0] == 0.0


def test_hjb_solution_matches_koopman_on_axis(config):
    fd = koopctl.solve_hjb(config)
    x1, x2 = fd.axes
    assert fd.values.shape == (len(x1), len(x2))
    assert fd.time == 0.0
    sol = koopctl.solve_koopman(config)
    for x in ([0.0, 0.0], [0.5, 0.0], [1.0, 0.0]):
        assert fd.psi(x) == pytest.approx(sol.psi(x), rel=0.05)


def test_feynman_kac_estimate(config):
    mean, stderr = koopctl.feynman_kac(config, [1.0, 0.0], 2000, seed=3)
    assert stderr > 0.0
    assert math.isfinite(mean) and 0.0 < mean <= 1.0
    again = koopctl.feynman_kac(config, [1.0, 0.0], 2000, seed=3)
    assert again == (mean, stderr)


def test_simulate_zero_controller(config):
    run = koopctl.simulate(config, "zero", seed=5)
    assert run["x"].shape == (51, 2)
    assert run["u"].shape == (50, 2)
    assert np.all(run["u"] == 0.0)
    assert run["t"][-1] == pytest.approx(0.05)


def test_errors_carry_a_code():
    with pytest.raises(koopctl.KoopctlError) as info:
        koopctl.Config.from_preset("vdp", {"control_weight": "0 0; 0 1"})
    assert info.value.code == "ValidationError"
    with pytest.raises(koopctl.KoopctlError) as info:
        koopctl.Config.from_preset("vdp", {"koopman.dt": "abc"})
    assert info.value.code == "ParseError"


def test_cli_round_trip():
    status, out, err = koopctl.run_cli(["--preset", "vdp", "solve-fk", "--npaths", "0"])
    assert status == 2
    assert "error[ValidationError]" in err
