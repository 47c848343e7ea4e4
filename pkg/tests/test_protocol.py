import json
from itertools import combinations

import numpy as np
import pytest

from qpkid.errors import ConsumedCopy, CopyLimitExceeded, UsageExhausted
from qpkid.protocol import (
    KeyIssuer,
    Params,
    PrivateKey,
    Transcript,
    identify,
    issue_public_key,
    issuer_from_dict,
    kernel_run,
    key_qubit,
    keygen,
    phase_of,
    private_key_dict,
    public_key_dict,
)
from qpkid.rng import stream


def issuer_with(x, r):
    return KeyIssuer(PrivateKey(tuple(x), r), Params(s=len(x), r=r))


class TestParams:
    @pytest.mark.parametrize("s,r", [(0, 1), (1, 0), (-3, 2)])
    def test_invalid(self, s, r):
        with pytest.raises(ValueError):
            Params(s=s, r=r)


class TestKeygen:
    def test_range(self):
        issuer = keygen(Params(s=3, r=1), stream(0))
        assert all(v in (1, 2, 3) for v in issuer.private.x)
        assert issuer.copies_issued == 0 and issuer.alice_runs_used == 0

    def test_uniformity(self):
        n = 10**5
        issuer = keygen(Params(s=n, r=2), stream(11, "uniform"))
        counts = np.bincount(issuer.private.x, minlength=6)[1:]
        sigma = np.sqrt(n * 0.2 * 0.8)
        assert np.all(np.abs(counts - 0.2 * n) <= 4 * sigma)

    def test_deterministic(self):
        a = keygen(Params(s=50, r=4), stream(5, "k"))
        b = keygen(Params(s=50, r=4), stream(5, "k"))
        assert a.private == b.private


class TestPhaseOf:
    def test_top_value_is_full_turn(self):
        assert phase_of(7, 3) == pytest.approx(2 * np.pi)

    def test_examples(self):
        assert phase_of(1, 1) == pytest.approx(2 * np.pi / 3)
        assert phase_of(4, 3) == pytest.approx(8 * np.pi / 7)

    @pytest.mark.parametrize("x", [0, 4])
    def test_out_of_range(self, x):
        with pytest.raises(ValueError):
            phase_of(x, 1)


class TestPublicKey:
    def test_copy_limit(self):
        issuer = keygen(Params(s=4, r=1), stream(0))
        issue_public_key(issuer)
        with pytest.raises(CopyLimitExceeded):
            issue_public_key(issuer)

    def test_qubits_normalized(self):
        copy = issue_public_key(keygen(Params(s=16, r=3), stream(1)))
        assert all(abs(np.vdot(q, q) - 1) < 1e-15 for q in copy.qubits)

    def test_amplitudes(self):
        copy = issue_public_key(issuer_with([1, 3], r=2))
        expected = np.array([1, np.exp(2j * np.pi / 5)]) / np.sqrt(2)
        assert np.allclose(copy.qubits[0], expected, atol=1e-15)

    def test_distinct_keys_overlap_below_one(self):
        for r in range(1, 9):
            m = 2 * r + 1
            for x, y in combinations(range(1, m + 1), 2):
                ov = abs(np.vdot(key_qubit(x, r), key_qubit(y, r))) ** 2
                assert ov == pytest.approx(np.cos(np.pi * (x - y) / m) ** 2, abs=1e-12)
                assert ov < 1 - 1e-6


class TestKernel:
    @pytest.mark.parametrize("b", [0, 1])
    def test_honest_iteration_passes_for_either_bit(self, b):
        issuer = issuer_with([2], r=2)
        copy = issue_public_key(issuer)
        # find seeds that produce the requested bit
        for seed in range(100):
            rng = stream(seed, "kernel")
            if int(stream(seed, "kernel").integers(0, 2)) == b:
                rec = kernel_run(issuer, copy, 0, rng)
                assert rec.b == b and rec.b_prime == b and rec.passed
                return
        pytest.fail("no seed produced the requested bit")

    def test_reuse_of_consumed_qubit(self):
        issuer = issuer_with([1, 2], r=1)
        copy = issue_public_key(issuer)
        kernel_run(issuer, copy, 0, stream(0))
        with pytest.raises(ConsumedCopy):
            kernel_run(issuer, copy, 0, stream(1))

    def test_consumes_exactly_one_qubit(self):
        issuer = issuer_with([1, 2, 3], r=1)
        copy = issue_public_key(issuer)
        kernel_run(issuer, copy, 1, stream(0))
        assert copy.consumed == [False, True, False]

    def test_many_honest_kernels_pass(self):
        rng = stream(3, "many")
        passed = 0
        for k in range(10**4 // 20):
            issuer = keygen(Params(s=20, r=int(rng.integers(1, 9))), rng)
            copy = issue_public_key(issuer)
            passed += sum(kernel_run(issuer, copy, j, rng).passed for j in range(20))
        assert passed == 10**4


class TestIdentify:
    def test_honest_accepts(self):
        for r, s in [(1, 1), (2, 5), (8, 64)]:
            issuer = keygen(Params(s=s, r=r), stream(r, s))
            for _ in range(r):
                tr = identify(issuer, issue_public_key(issuer), stream(r, s, "run"))
                assert tr.verdict == "accept"
                assert len(tr.records) == s

    def test_usage_exhausted(self):
        issuer = keygen(Params(s=4, r=1), stream(0))
        identify(issuer, issue_public_key(issuer), stream(1))
        issuer.copies_issued = 0  # a second copy would also be refused; isolate the run cap
        with pytest.raises(UsageExhausted):
            identify(issuer, issue_public_key(issuer), stream(2))

    def test_consumed_copy_rejected(self):
        issuer = keygen(Params(s=4, r=2), stream(0))
        copy = issue_public_key(issuer)
        kernel_run(issuer, copy, 0, stream(1))
        with pytest.raises(ConsumedCopy):
            identify(issuer, copy, stream(2))

    def test_accounting_caps(self):
        r = 3
        issuer = keygen(Params(s=2, r=r), stream(0))
        for _ in range(r):
            identify(issuer, issue_public_key(issuer), stream(1))
        assert issuer.copies_issued == r and issuer.alice_runs_used == r
        with pytest.raises(CopyLimitExceeded):
            issue_public_key(issuer)


class TestSerialization:
    def test_transcript_roundtrip(self):
        issuer = keygen(Params(s=6, r=2), stream(0))
        tr = identify(issuer, issue_public_key(issuer), stream(1), seed=42)
        d = json.loads(json.dumps(tr.to_dict()))
        assert Transcript.from_dict(d) == tr
        assert d["verdict"] == "accept" and d["seed"] == 42

    def test_tampered_verdict(self):
        issuer = keygen(Params(s=2, r=1), stream(0))
        d = identify(issuer, issue_public_key(issuer), stream(1)).to_dict()
        d["verdict"] = "reject"
        with pytest.raises(ValueError):
            Transcript.from_dict(d)

    def test_public_export_hides_key(self):
        issuer = keygen(Params(s=5, r=2), stream(0))
        pub = public_key_dict(issuer)
        assert "x" not in pub and pub["copy_budget"] == 2
        priv = private_key_dict(issuer, seed=9)
        again = issuer_from_dict(json.loads(json.dumps(priv)))
        assert again.private == issuer.private
