import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pqscms.butterfly import run_provisioning  # noqa: E402
from pqscms.pki import EntityRole, HierarchyConfig, build_hierarchy, enroll, new_end_entity  # noqa: E402
from pqscms.provider import CryptoProvider  # noqa: E402


@pytest.fixture(scope="session")
def provider():
    return CryptoProvider()


@pytest.fixture(scope="session")
def hierarchy(provider):
    return build_hierarchy(HierarchyConfig(), provider)


@pytest.fixture(scope="session")
def enrolled_ee(hierarchy, provider):
    ee = new_end_entity(hierarchy, "EE-fixture")
    enroll(ee, hierarchy, provider)
    return ee


@pytest.fixture(scope="session")
def provisioned(hierarchy, enrolled_ee, provider):
    return run_provisioning(
        enrolled_ee, hierarchy[EntityRole.RA], hierarchy[EntityRole.ACA], 8, provider
    )


ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
