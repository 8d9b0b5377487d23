import csv
import json
import math

import pytest

from app.database import RunStore
from config import ExitCodes
from launcher import main


def launch(*args) -> int:
    return main(['launcher.py', *map(str, args)])


def read_rows(path):
    with open(path, newline='') as fp:
        return list(csv.DictReader(fp))


@pytest.fixture
def term_config(tmp_path, write_config):
    terms = tmp_path / 'toy.txt'
    terms.write_text('0.6 X0 X1\n-0.4 Z0\n0.3 Y1 Z2\n')
    return write_config(model={'kind': 'term_file', 'path': str(terms)}, observable='Z0', initial_state='zero')


def test_help_and_version(capsys):
    assert launch() == ExitCodes.success
    assert 'ftcost' in capsys.readouterr().out

    assert launch('help', 'run') == ExitCodes.success
    assert '--epsilon' in capsys.readouterr().out

    assert launch('--version') == ExitCodes.success


def test_unknown_command():
    assert launch('simulate') == ExitCodes.validation
    assert launch('help', 'simulate') == ExitCodes.validation


def test_missing_config(tmp_path):
    assert launch('run', '-c', tmp_path / 'missing.json') == ExitCodes.validation
    assert launch('run') == ExitCodes.validation


def test_run_with_zero_shots_writes_only_the_header(tmp_path, write_config):
    out = tmp_path / 'run'
    assert launch('run', '-c', write_config(shots=0), '--output', out) == ExitCodes.success

    store = RunStore(out)
    header = store.read_header()
    assert header['config']['shots'] == 0
    assert header['delta'] == pytest.approx(math.pi / 32)
    assert header['shots_bound'] >= 1
    assert not store.shots_path.exists()
    assert store.read_summary() is None


def test_run_then_audit(tmp_path, write_config):
    out = tmp_path / 'run'
    assert launch('run', '-c', write_config(), '--output', out, '--reference') == ExitCodes.success

    store = RunStore(out)
    summary = store.read_summary()
    assert summary['shots'] == 40
    assert 'trotter_reference' in summary
    assert len(list(store.iter_shots())) == 40

    assert launch('audit', '-r', out) == ExitCodes.success

    summary['mean'] += 1.0
    store.summary_path.write_text(json.dumps(summary))
    assert launch('audit', '-r', out) == ExitCodes.numerical_failure


def test_run_summary_does_not_depend_on_workers(tmp_path, write_config):
    cfg = write_config(noise={'p1': 0.01, 'p2': 0.01, 'enabled': True})
    artifacts = {}
    for workers in (1, 4, 8):
        out = tmp_path / f'workers{workers}'
        assert launch('run', '-c', cfg, '--output', out, '-w', workers) == ExitCodes.success
        artifacts[workers] = ((out / 'summary.json').read_bytes(), (out / 'shots.jsonl').read_bytes())

    assert artifacts[1] == artifacts[4] == artifacts[8]


def test_run_header_records_step_choice(tmp_path, write_config, term_config):
    ring_out, terms_out = tmp_path / 'ring', tmp_path / 'terms'
    assert launch('run', '-c', write_config(shots=0), '--output', ring_out) == ExitCodes.success
    assert launch('run', '-c', term_config, '-s', 0, '--output', terms_out) == ExitCodes.success

    ring = RunStore(ring_out).read_header()
    assert ring['suggested_N_heuristic'] is True

    terms = RunStore(terms_out).read_header()
    assert terms['suggested_N_heuristic'] is False
    # ||c||_1 = 1.3, T = 0.5, epsilon = 0.05
    assert terms['suggested_N'] == math.ceil(0.25 * 1.3 ** 2 / 0.1)
    assert terms['abs_angle_sum'] == pytest.approx(2 * 0.5 * 1.3)


def test_run_rejects_invalid_overrides(tmp_path, write_config):
    cfg = write_config()
    assert launch('run', '-c', cfg, '--output', tmp_path / 'run', '-d', '4.0') == ExitCodes.validation
    assert launch('run', '-c', cfg, '--output', tmp_path / 'run', '-o', 'X9') == ExitCodes.validation
    assert launch('run', '-c', cfg, '-p', 'noisy') == ExitCodes.validation


def test_sweep_without_values_writes_a_header(tmp_path, write_config):
    out = tmp_path / 'sweep.csv'
    assert launch('sweep', '-c', write_config(shots=0), '-a', 'T', '--output', out) == ExitCodes.success
    assert out.read_text().startswith('T,N,delta,nu_inf')
    assert read_rows(out) == []


def test_sweep_over_delta(tmp_path, write_config):
    out = tmp_path / 'sweep.csv'
    args = ('sweep', '-c', write_config(shots=0), '-a', 'delta', '-v', 'pi/16', 'pi/32', '-k', 50, '--output', out)
    assert launch(*args) == ExitCodes.success

    rows = read_rows(out)
    assert [float(row['delta']) for row in rows] == pytest.approx([math.pi / 16, math.pi / 32])
    assert float(rows[1]['nu_inf']) > float(rows[0]['nu_inf'])
    assert float(rows[1]['overhead']) < float(rows[0]['overhead'])
    assert all(row['draws'] == '50' for row in rows)


def test_sweep_rejects_bad_axis(tmp_path, write_config):
    assert launch('sweep', '-c', write_config(), '-a', 'shots', '-v', '1') == ExitCodes.validation
    assert launch('sweep', '-c', write_config(), '-a', 'N', '-v', '2.5') == ExitCodes.validation


def test_trajectory_from_time_zero(tmp_path, write_config):
    out = tmp_path / 'trajectory.csv'
    args = ('trajectory', '-c', write_config(), '-t', 0, 0.25, '--trotter-steps', 400, '-x', '--output', out)
    assert launch(*args) == ExitCodes.success

    rows = read_rows(out)
    assert [float(row['T']) for row in rows] == [0.0, 0.25]
    # <X0> of |+...+> before any evolution
    assert float(rows[0]['mean']) == pytest.approx(1.0)
    assert float(rows[0]['exact']) == pytest.approx(1.0)
    assert float(rows[1]['trotter_400']) == pytest.approx(float(rows[1]['exact']), abs=0.05)


def test_trajectory_validation(tmp_path, write_config):
    cfg = write_config()
    assert launch('trajectory', '-c', cfg, '-t', 0.5, 0.25) == ExitCodes.validation
    assert launch('trajectory', '-c', cfg, '-t', -1) == ExitCodes.validation
    assert launch('trajectory', '-c', write_config(shots=0), '-t', 0.5) == ExitCodes.validation


def test_qdrift_on_constant_model(tmp_path, term_config):
    out = tmp_path / 'qdrift'
    assert launch('qdrift', '-c', term_config, '-r', 30, '--output', out) == ExitCodes.success

    store = RunStore(out)
    assert store.read_header()['rotations'] == 30
    assert all(shot['nu'] == 30 for shot in store.iter_shots())
    assert launch('audit', '-r', out) == ExitCodes.success


def test_qdrift_needs_constant_model(tmp_path, write_config):
    assert launch('qdrift', '-c', write_config(), '--output', tmp_path / 'q') == ExitCodes.validation
    assert launch('qdrift', '-c', write_config(), '-r', 5, '-e', 0.1) == ExitCodes.validation


def test_exact(tmp_path, term_config):
    out = tmp_path / 'exact.json'
    assert launch('exact', '-c', term_config, '--output', out) == ExitCodes.success

    result = json.loads(out.read_text())
    # expectations move by at most twice the state error
    assert result['trotter_deviation'] <= 2 * result['trotter_error_bound']
    assert result['suggested_N'] >= 1
    assert result['classical_draws'] > 0


def test_exact_on_spin_ring_uses_the_ring_bound(tmp_path, write_config):
    out = tmp_path / 'exact.json'
    assert launch('exact', '-c', write_config(), '--output', out) == ExitCodes.success

    result = json.loads(out.read_text())
    assert result['commutator_norm_sq'] <= 20 * 5
    assert result['trotter_error_bound'] == pytest.approx(0.25 / 100 * result['commutator_norm_sq'])
    assert result['simple_bound'] is None


def test_ftcost_defaults(tmp_path, capsys):
    out = tmp_path / 'ftcost.json'
    assert launch('ftcost', '--output', out) == ExitCodes.success
    assert '298,647' in capsys.readouterr().out

    data = json.loads(out.read_text())
    by_method = {report['method']: report for report in data['reports']}
    assert by_method['direct_synthesis']['t_gates'] == 2_438_336
    assert by_method['catalyst_tower']['reference']['t_gates'] == 298_647
    assert data['towers'] == []


def test_ftcost_at_lowest_level(tmp_path):
    out = tmp_path / 'ftcost.json'
    assert launch('ftcost', '--l0', 4, '--sweep', 4, 5, '--output', out) == ExitCodes.success

    data = json.loads(out.read_text())
    assert data['parameters']['delta'] == pytest.approx(math.pi / 8)
    assert all(report['reference'] == {} for report in data['reports'])
    assert [tower['parameters']['l0'] for tower in data['towers']] == [4, 5]


def test_ftcost_rejects_non_hierarchy_angle(tmp_path):
    assert launch('ftcost', '-d', 0.01, '--output', tmp_path / 'ftcost.json') == ExitCodes.validation
    assert launch('ftcost', '--l0', 2, '--output', tmp_path / 'ftcost.json') == ExitCodes.validation


@pytest.mark.slow
@pytest.mark.parametrize('observable', ['X0', 'Z2'])
def test_unbiasedness_preset(tmp_path, observable):
    out = tmp_path / 'run'
    args = ('run', '-p', 'unbiasedness', '-o', observable, '--output', out, '--reference')
    assert launch(*args) == ExitCodes.success

    summary = RunStore(out).read_summary()
    assert summary['shots'] == 10_000
    assert abs(summary['mean'] - summary['trotter_reference']) <= 4 * summary['std_error']
