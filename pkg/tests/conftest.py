import pytest

from meshserial import _backend, generate_structured

BACKENDS = [pytest.param(_backend.python_kernels, id="python")]
if _backend.compiled_kernels is not None:
    BACKENDS.append(pytest.param(_backend.compiled_kernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def kern(request):
    return request.param


@pytest.fixture
def unit_quad():
    return generate_structured(1, 1, "quad")


# criterion name -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
