# -*- coding: utf-8 -*-

import pandas as pd

from eiv_charts import rate_scaling_chart, write_simulation_charts, z_histogram_chart
from eiv_simlab import ReplicationTable, Scenario, run_scenario

PNG_SIGNATURE = b"\x89PNG"


def _grid_table():
    scenario = Scenario(name="graficos", n=20, p=5, p_e=2, sigma=0.5, tau=1.0, n_reps=6, base_seed=5,
                        grid=({"n": 20}, {"n": 40}, {"n": 80}))
    return run_scenario(scenario, workers=1)


def test_charts_written_as_png(tmp_path):
    paths = write_simulation_charts(_grid_table(), str(tmp_path))
    assert sorted(p.split("/")[-1] for p in paths) == ["rate_scaling.png", "z_histogram.png"]
    for path in paths:
        with open(path, "rb") as f:
            assert f.read(4) == PNG_SIGNATURE


def test_rate_chart_needs_three_grid_values(tmp_path):
    table = ReplicationTable(pd.DataFrame({"n": [10, 20], "coef_dev": [1.0, 0.5], "z": [0.1, -0.2]}))
    assert rate_scaling_chart(table, str(tmp_path / "taxa.png")) is None
    assert not (tmp_path / "taxa.png").exists()


def test_z_histogram_needs_statistics(tmp_path):
    table = ReplicationTable(pd.DataFrame({"z": [float("nan"), 0.3]}))
    assert z_histogram_chart(table, str(tmp_path / "z.png")) is None
