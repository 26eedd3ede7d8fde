"""Shared fixtures: repository root on sys.path, parsed networks, JSON schemas."""

import json
import os
import sys

import pytest
from hypothesis import HealthCheck, settings

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)

from modules.net_parser import parse_network, parse_network_file  # noqa: E402

NETWORK_DIR = os.path.join(ROOT, 'networks')
SCHEMA_DIR = os.path.join(ROOT, 'schemas')

settings.register_profile('ci', deadline=None, derandomize=True, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile('dev', deadline=None, max_examples=25)
settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'dev'))


def network_path(name):
    return os.path.join(NETWORK_DIR, f"{name}.crn")


def load_network(name):
    return parse_network_file(network_path(name))


@pytest.fixture
def networks():
    """Loader for networks/<name>.crn"""
    return load_network


@pytest.fixture
def abb():
    """0 <-> A+B, B <-> 2B with unit rates"""
    return load_network('abb')


@pytest.fixture
def comparison():
    """B <-> 0 <-> A+B"""
    return load_network('comparison')


@pytest.fixture
def two_state():
    """A <-> 0 restricted to {0, 1} by the box; the simplest reversible chain."""
    return parse_network("0 <-> A [1, 1]")


@pytest.fixture
def schema():
    def load(name):
        with open(os.path.join(SCHEMA_DIR, f"{name}.json"), 'r', encoding='utf-8') as handle:
            return json.load(handle)
    return load


@pytest.fixture
def workdir(tmp_path):
    """Writes a reference network (or raw text) into a temp directory and returns its path."""
    def place(name=None, text=None):
        if text is None:
            with open(network_path(name), 'r', encoding='utf-8') as handle:
                text = handle.read()
        target = tmp_path / f"{name or 'network'}.crn"
        target.write_text(text, encoding='utf-8')
        return str(target)
    return place
