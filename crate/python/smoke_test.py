"""Smoke test for the compiled extension.

Build first:
    cargo build --release -p oneclick-py --features extension-module
The library path can be overridden with ONECLICK_LIB.
"""

import importlib.machinery
import importlib.util
import json
import math
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    path = Path(os.environ.get("ONECLICK_LIB", ROOT / "target" / "release" / "liboneclick.so"))
    loader = importlib.machinery.ExtensionFileLoader("oneclick", str(path))
    spec = importlib.util.spec_from_file_location("oneclick", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    oc = load()
    assert abs(oc.cutoff_efficiency(2, 2 * math.pi / 3) - 2 / 3) < 1e-12
    assert oc.steering_parameter(math.pi / 4, 1.1681, 0.615) < 0
    assert oc.steering_parameter(math.pi / 4, 1.0, 0.45) >= 0

    bell = oc.bell_noise_threshold(1.0, "optimized")
    assert abs(bell["eta"] - (1 - 1 / math.sqrt(2))) < 1e-6
    assert oc.bell_noise_threshold(0.8, "maxent")["below_threshold"]

    eta, _, _ = oc.steering_wnr(1.0, "maxent")
    assert abs(eta - (1 - 1 / math.sqrt(2))) < 1e-6

    config = {"alpha": math.pi / 4, "epsilon": 0.615, "deltas": [1.1681], "heralds": 100000, "repetitions": 3}
    report = json.loads(oc.simulate(json.dumps(config)))
    assert len(report["points"]) == 1

    try:
        oc.cutoff_efficiency(1, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("X = 1 must be rejected")
    print("python smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
