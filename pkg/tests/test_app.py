"""REST service: status, command endpoints and input errors."""

import pytest

from app import VERSION, app


@pytest.fixture
def client():
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


@pytest.fixture
def abb_text(workdir):
    with open(workdir('abb'), 'r', encoding='utf-8') as handle:
        return handle.read()


def test_status(client):
    response = client.get('/api/status')
    assert response.status_code == 200
    data = response.get_json()
    assert data['ok'] and data['version'] == VERSION
    assert data['defaults']['umax'] == 4


def test_certify(client, abb_text):
    response = client.post('/api/certify', json={'network': abb_text, 'from': [0, 0]})
    assert response.status_code == 200
    data = response.get_json()
    assert data['ok']
    assert data['certificate']['F_value'] == pytest.approx(4 / 3.5)


def test_certify_negative_outcome_is_not_an_error(client):
    response = client.post('/api/certify', json={'network': "B <-> 0\n0 <-> A+B"})
    assert response.status_code == 200
    assert response.get_json()['reason'] == 'no strong tier-1 cycle'


def test_missing_network(client):
    response = client.post('/api/validate', json={})
    assert response.status_code == 400
    assert response.get_json()['code'] == 'missing_network'


def test_syntax_error_carries_span(client):
    response = client.post('/api/validate', json={'network': "A -> A"})
    assert response.status_code == 400
    data = response.get_json()
    assert data == {'ok': False, 'code': 'self_loop', 'error': data['error'],
                    'span': data['span']}
    assert data['span']['column'] == 3


def test_rho_out_of_range(client, abb_text):
    response = client.post('/api/certify', json={'network': abb_text, 'rho': 5})
    assert response.status_code == 400
    assert response.get_json()['code'] == 'parameter_error'


def test_malformed_option(client, abb_text):
    response = client.post('/api/tvnorm', json={'network': abb_text, 'grid': 'many'})
    assert response.status_code == 400
    assert response.get_json()['code'] == 'bad_option'


def test_states_accepted_as_text_or_lists(client, abb_text):
    as_text = client.post('/api/trapping', json={'network': abb_text, 'box': '12,12'})
    as_list = client.post('/api/trapping', json={'network': abb_text, 'box': [12, 12]})
    assert as_text.get_json() == as_list.get_json()
    assert as_text.get_json()['cycle']['path'][0] == [10, 0]


def test_simulate_endpoint(client, abb_text):
    data = client.post('/api/simulate', json={'network': abb_text, 'tmax': 1, 'seed': 3}).get_json()
    assert data['ok'] and data['states'][0] == [0, 0]
    assert len(data['times']) == data['jumps'] + 1


def test_analyze_endpoint(client, abb_text):
    data = client.post('/api/analyze', json={'network': abb_text}).get_json()
    assert data['corollary']['corollary'] == 'cor3'
    assert data['balance']['kind'] == 'detailed'
