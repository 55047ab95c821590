import pytest

from core.errors import InputError
from core.failover_model import DemandSequence, ProblemParams
from data_ingestion.instance_io import read_instance, write_instance


def test_json_instance(tmp_path):
    path = tmp_path / "instance.json"
    params = ProblemParams(failover_capacity=1.3, machine_budget=8)
    write_instance(str(path), params, DemandSequence((0.25, 0.5, 0.125)))
    loaded_params, demands = read_instance(str(path))
    assert loaded_params == params
    assert demands.sizes == (0.25, 0.5, 0.125)


def test_text_instance_without_budget(tmp_path):
    path = tmp_path / "instance.txt"
    path.write_text("1.0 -\n0.25\n0.5\n\n0.1\n")
    params, demands = read_instance(str(path))
    assert params.machine_budget is None and params.failover_capacity == 1.0
    assert demands.sizes == (0.25, 0.5, 0.1)


def test_text_writer_is_readable(tmp_path):
    path = tmp_path / "nested" / "instance.txt"
    write_instance(str(path), ProblemParams(machine_budget=4), DemandSequence((0.3,)), fmt="text")
    params, demands = read_instance(str(path))
    assert params.machine_budget == 4 and demands.sizes == (0.3,)


@pytest.mark.parametrize("body", [
    '{"B": 1.0, "m": 4, "sizes": [0.7]}',
    '{"B": 0.5, "sizes": []}',
    '{"B": 1.0, "sizes": [0.1, }',
    "1.0 4\nabc\n",
    "1.0\n0.1\n",
    "",
])
def test_malformed_instances(tmp_path, body):
    path = tmp_path / "bad"
    path.write_text(body)
    with pytest.raises(InputError):
        read_instance(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        read_instance(str(tmp_path / "absent.json"))
