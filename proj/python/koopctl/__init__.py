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
"""Koopman-operator, finite-difference and path-integral solvers for
linearly solvable stochastic optimal control."""

from ._core import (
    Config,
    HjbSolution,
    KoopctlError,
    KoopmanSolution,
    feynman_kac,
    run_cli,
    simulate,
    solve_hjb,
    solve_koopman,
)

__all__ = [
    "Config",
    "HjbSolution",
    "KoopctlError",
    "KoopmanSolution",
    "feynman_kac",
    "run_cli",
    "simulate",
    "solve_hjb",
    "solve_koopman",
]
