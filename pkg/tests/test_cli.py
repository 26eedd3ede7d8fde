"""Command line: exit codes, JSON and CSV output, artifacts beside the input."""

import json

import jsonschema
import pytest

import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    """The JSON error object is the last line written to stderr."""
    return json.loads(err.strip().splitlines()[-1])


def test_certify_example(capsys, workdir, schema):
    code, out, _ = run_cli(capsys, 'certify', workdir('abb'), '--no-write')
    assert code == 0
    payload = json.loads(out)
    assert payload['ok']
    assert payload['certificate']['n_star'] == 1
    assert payload['certificate']['corollary'] == 'cor3'
    jsonschema.validate(payload, schema('certificate'))


def test_certify_writes_artifact(capsys, workdir, tmp_path):
    code, out, _ = run_cli(capsys, 'certify', workdir('abb'), '--from', '0,0')
    assert code == 0
    written = tmp_path / 'abb.cert.json'
    assert written.exists()
    assert json.loads(written.read_text()) == json.loads(out)


def test_certify_negative_outcome(capsys, workdir, tmp_path):
    code, out, _ = run_cli(capsys, 'certify', workdir('comparison'))
    assert code == 1
    assert json.loads(out) == {'ok': False, 'reason': 'no strong tier-1 cycle', 'corollary': None}
    assert not (tmp_path / 'comparison.cert.json').exists()


def test_certify_rejects_rho(capsys, workdir, schema):
    code, out, err = run_cli(capsys, 'certify', workdir('abb'), '--rho', '3', '--no-write')
    assert code == 2
    assert out == ''
    payload = error_of(err)
    assert payload['code'] == 'parameter_error'
    jsonschema.validate(payload, schema('error'))


def test_syntax_error_reports_span(capsys, workdir, schema):
    code, _, err = run_cli(capsys, 'validate', workdir(text="0 <-> A+B\nB -> + C\n"))
    assert code == 2
    payload = error_of(err)
    assert payload['code'] == 'syntax_error'
    assert (payload['span']['line'], payload['span']['column']) == (2, 6)
    jsonschema.validate(payload, schema('error'))


def test_missing_input_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, 'validate', str(tmp_path / 'absent.crn'))
    assert code == 2
    assert error_of(err)['code'] == 'io_error'


@pytest.mark.parametrize('argv', [
    ['--box', '1,x'],
    ['--grid', '0'],
    ['--from', '1,2,3'],
])
def test_bad_options_exit_with_input_error(capsys, workdir, argv):
    code, _, err = run_cli(capsys, 'tvnorm', workdir('abb'), '--no-write', *argv)
    assert code == 2
    assert error_of(err)['code'] == 'bad_option'


def test_validate_reports_violations(capsys, workdir, schema):
    code, out, _ = run_cli(capsys, 'validate', workdir(text="A -> B\nA -> B [2]\nB -> A\n"))
    assert code == 1
    payload = json.loads(out)
    assert {v['kind'] for v in payload['violations']} == {'duplicate reaction'}
    jsonschema.validate(payload, schema('validation'))


def test_zero_rate_is_rejected_while_parsing(capsys, workdir, schema):
    code, _, err = run_cli(capsys, 'validate', workdir(text="A -> B\nB -> A [0]\n"))
    assert code == 2
    payload = error_of(err)
    assert payload['code'] == 'bad_rate'
    assert (payload['span']['line'], payload['span']['column']) == (2, 9)
    jsonschema.validate(payload, schema('error'))


def test_validate_clean_network(capsys, workdir, schema):
    code, out, _ = run_cli(capsys, 'validate', workdir('abb'))
    assert code == 0
    payload = json.loads(out)
    assert payload == {'ok': True, 'violations': [], 'species': ['A', 'B'], 'reactions': 4}
    jsonschema.validate(payload, schema('validation'))


def test_analyze(capsys, workdir, schema):
    code, out, _ = run_cli(capsys, 'analyze', workdir('complex_balanced'))
    assert code == 0
    payload = json.loads(out)
    assert payload['deficiency']['deficiency'] == 0
    assert payload['weakly_reversible']
    jsonschema.validate(payload, schema('analysis'))


def test_simulate_csv(capsys, workdir, tmp_path):
    code, out, _ = run_cli(capsys, 'simulate', workdir('abb'), '--tmax', '2', '--seed', '5',
                           '--format', 'csv')
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == 't,A,B'
    assert lines[1] == '0.0,0,0'
    assert (tmp_path / 'abb.traj.csv').read_text() == out


def test_simulate_is_reproducible(capsys, workdir):
    path = workdir('abb')
    first = run_cli(capsys, 'simulate', path, '--seed', '9', '--no-write')[1]
    second = run_cli(capsys, 'simulate', path, '--seed', '9', '--no-write')[1]
    assert first == second


def test_tvnorm(capsys, workdir, tmp_path, schema):
    code, out, _ = run_cli(capsys, 'tvnorm', workdir('abb'), '--from', '0,0;2,0', '--box', '12,12',
                           '--tmax', '3', '--grid', '6')
    assert code == 0
    payload = json.loads(out)
    assert [c['initial'] for c in payload['curves']] == [[0, 0], [2, 0]]
    assert len(payload['curves'][0]['times']) == 7
    jsonschema.validate(payload, schema('decay'))
    csv = (tmp_path / 'abb.tv.csv').read_text()
    assert csv.startswith('# initial=0,0\nt,tv_lower,tv_upper\n')


def test_congestion(capsys, workdir, tmp_path, schema):
    code, out, _ = run_cli(capsys, 'congestion', workdir('abb'), '--box', '3,3')
    assert code == 0
    payload = json.loads(out)
    assert payload['pi'] == 'detailed'
    assert payload['pairs'] == 16 * 15 // 2
    jsonschema.validate(payload, schema('congestion'))
    assert (tmp_path / 'abb.congestion.json').exists()


def test_trapping(capsys, workdir):
    code, out, _ = run_cli(capsys, 'trapping', workdir('abb'), '--box', '12,12', '--rho', '0.5')
    assert code == 0
    payload = json.loads(out)
    assert payload['cycle']['path'] == [[10, 0], [11, 1], [10, 0]]


def test_trapping_none(capsys, workdir):
    code, out, _ = run_cli(capsys, 'trapping', workdir('comparison'), '--box', '12,12')
    assert code == 1
    assert json.loads(out)['cycle'] is None


def test_unknown_command_is_rejected_by_argparse(workdir):
    with pytest.raises(SystemExit):
        cli.main(['explode', workdir('abb')])


def test_network_files_are_left_untouched(capsys, workdir, tmp_path):
    path = workdir('abb')
    before = open(path, encoding='utf-8').read()
    run_cli(capsys, 'certify', path)
    assert open(path, encoding='utf-8').read() == before
