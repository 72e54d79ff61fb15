"""Session-wide fixtures for the expensive dataset/training/eval chain.

Everything downstream of ``gen_data`` is deterministic for fixed seeds,
so building the corpus and checkpoints once per session keeps the slow
acceptance tests honest without repeating a multi-minute pipeline.
Wall-clock costs are recorded because the release gate bounds them.
"""

import time

import pytest

from teleopsim.harness import eval_closed_loop, gen_data, train_models


@pytest.fixture(scope="session")
def assets(tmp_path_factory):
    """Collection runs plus the four trained checkpoints."""
    root = tmp_path_factory.mktemp("assets")
    data_dir = root / "data"
    model_dir = root / "models"
    t0 = time.perf_counter()
    paths = gen_data(data_dir)
    summary = train_models(data_dir, model_dir)
    return {
        "data": data_dir,
        "models": model_dir,
        "paths": paths,
        "summary": summary,
        "build_seconds": time.perf_counter() - t0,
    }


@pytest.fixture(scope="session")
def closed_loop_report(assets, tmp_path_factory):
    """Full three-case persona sweep, shared by the ordering and
    framework-comparison tests."""
    out = tmp_path_factory.mktemp("sweep")
    t0 = time.perf_counter()
    report = eval_closed_loop(assets["models"], out)
    return {"report": report, "seconds": time.perf_counter() - t0}
