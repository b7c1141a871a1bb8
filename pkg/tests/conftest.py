import json
from importlib import resources

import pytest

from monosafe.certificate import SSequenceCertificate
from monosafe.systems import load_system_file

DATA = resources.files("monosafe.data")


@pytest.fixture(scope="session")
def case1():
    sys_, safe_set, digest = load_system_file(str(DATA / "case1.json"))
    return sys_, safe_set, digest


@pytest.fixture(scope="session")
def case1_cert():
    return SSequenceCertificate.load(str(DATA / "cert_case1.json"))


@pytest.fixture(scope="session")
def traffic():
    net, safe_set, digest = load_system_file(str(DATA / "traffic_table1.json"))
    return net, safe_set, digest


@pytest.fixture(scope="session")
def traffic_cert():
    return SSequenceCertificate.load(str(DATA / "cert_table2.json"))


@pytest.fixture(scope="session")
def traffic_spec_dict():
    return json.loads((DATA / "traffic_table1.json").read_text())
