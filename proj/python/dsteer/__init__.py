# Copyright 2026 The dsteer Authors
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
"""Distribution steering with invertible residual policies."""

from ._dsteer import (
    ConfigError,
    ContractError,
    ConvergenceError,
    DimensionError,
    DivergenceError,
    Error,
    SingularityError,
    benchmark,
    export_sdpa,
    gaussian_kl,
    gaussian_w2,
    invert,
    propagate,
    rollout,
    run,
    validate,
    w2_exact,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "ConvergenceError",
    "DimensionError",
    "DivergenceError",
    "Error",
    "SingularityError",
    "benchmark",
    "export_sdpa",
    "gaussian_kl",
    "gaussian_w2",
    "invert",
    "propagate",
    "rollout",
    "run",
    "validate",
    "w2_exact",
]
