import httpx
import pytest

from spotsim.client import HttpClient, LocalClient
from spotsim.errors import Infeasible, ParseError, SpotSimError, ValidationError
from spotsim.service import schemas

LOADTEST = "rps,cpu_percent,failure_rate_percent\n" + "".join(
    f"{r},{c},0.0\n" for r, c in [(10, 10), (20, 20), (30, 30), (40, 40), (50, 50)]
)


class TestLocalClient:
    def test_dispatch(self):
        resp = LocalClient().call(
            "characterize",
            schemas.CharacterizeRequest(loadtest_csv=LOADTEST, slo_min_rps=90),
        )
        assert resp.max_rps_per_pod == 50
        assert resp.initial_pods == 2

    def test_domain_errors_pass_through(self):
        with pytest.raises(ParseError):
            LocalClient().call(
                "characterize",
                schemas.CharacterizeRequest(loadtest_csv="junk", slo_min_rps=1),
            )


class _FakePost:
    def __init__(self, status_code, payload):
        self.status_code = status_code
        self.payload = payload
        self.calls = []

    def __call__(self, url, json=None, timeout=None):
        self.calls.append((url, json))
        request = httpx.Request("POST", url)
        return httpx.Response(self.status_code, json=self.payload, request=request)


class TestHttpClientErrorMapping:
    def _call(self, monkeypatch, status, payload):
        fake = _FakePost(status, payload)
        monkeypatch.setattr(httpx, "post", fake)
        client = HttpClient("http://example.invalid")
        req = schemas.CharacterizeRequest(loadtest_csv=LOADTEST, slo_min_rps=90)
        return fake, client.call("characterize", req)

    def test_success_roundtrip(self, monkeypatch):
        body = {
            "max_rps_per_pod": 50.0,
            "inflection_index": 4,
            "initial_pods": 2,
            "failure_threshold_used": 2.0,
        }
        fake, resp = self._call(monkeypatch, 200, body)
        assert resp == schemas.CharacterizeResponse(**body)
        assert fake.calls[0][0] == "http://example.invalid/characterize"

    @pytest.mark.parametrize(
        "category,exc",
        [("infeasible", Infeasible), ("parse", ParseError), ("validation", ValidationError)],
    )
    def test_error_categories(self, monkeypatch, category, exc):
        fake = _FakePost(400, {"category": category, "detail": "boom"})
        monkeypatch.setattr(httpx, "post", fake)
        with pytest.raises(exc, match="boom"):
            HttpClient("http://example.invalid").call(
                "characterize",
                schemas.CharacterizeRequest(loadtest_csv=LOADTEST, slo_min_rps=90),
            )

    def test_unknown_body_is_internal(self, monkeypatch):
        fake = _FakePost(500, {"weird": True})
        monkeypatch.setattr(httpx, "post", fake)
        with pytest.raises(SpotSimError):
            HttpClient("http://example.invalid").call(
                "characterize",
                schemas.CharacterizeRequest(loadtest_csv=LOADTEST, slo_min_rps=90),
            )
