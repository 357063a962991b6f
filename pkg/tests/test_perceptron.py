"""Hashed-perceptron engine tests with independent hashing oracles."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlpsim.perceptron import (CL_OFFSET_PLUS_FIRST, DELAYED_OFFCHIP,
                               DEFAULT_TABLE_BITS, FLP_FEATURES,
                               FLP_PRED_PLUS_CL_OFFSET, HIGH_OFFCHIP,
                               LAST4_PCS, ONCHIP, PC_PLUS_FIRST,
                               PC_XOR_BYTE_OFFSET, PC_XOR_CL_OFFSET,
                               SLP_FEATURES, WEIGHT_MAX, WEIGHT_MIN,
                               FeatureContext, HashedPerceptron,
                               PerceptronConfig, byte_offset, classify_flp,
                               cl_offset, clamp_confidence, feature_index,
                               fold_hash, last4_mix, rotl64)


def fold_reference(v, b):
    """Independent XOR-fold: split the 64-bit value into b-bit digits."""
    acc = 0
    digits = (64 + b - 1) // b
    for i in range(digits):
        acc ^= (v >> (i * b)) & ((1 << b) - 1)
    return acc


class TestHashing:
    @given(st.integers(0, (1 << 64) - 1), st.integers(1, 63))
    @settings(max_examples=300)
    def test_fold_matches_reference(self, v, b):
        assert fold_hash(v, b) == fold_reference(v, b)

    def test_fold_small_examples(self):
        assert fold_hash(0, 10) == 0
        assert fold_hash(0b1111111111, 10) == 0x3FF
        # Two aligned 10-bit digits XOR together.
        assert fold_hash((0x2AA << 10) | 0x155, 10) == 0x3FF

    def test_rotl64(self):
        assert rotl64(1, 1) == 2
        assert rotl64(1 << 63, 1) == 1
        assert rotl64(0xDEADBEEF, 0) == 0xDEADBEEF
        assert rotl64(rotl64(12345, 17), 64 - 17) == 12345

    def test_offsets(self):
        # Byte offset is bits 0..5, cacheline offset bits 6..11.
        addr = (0x2A << 6) | 0x15
        assert byte_offset(addr) == 0x15
        assert cl_offset(addr) == 0x2A
        assert cl_offset(0x1000) == 0          # page-aligned address
        assert cl_offset(0xFC0) == 63          # last line of a page


class TestFeatureIndex:
    def test_pc_xor_cl_offset(self):
        ctx = FeatureContext(pc=0x400100, addr=0x40)
        expect = fold_reference(0x400100, 10) ^ 1
        assert feature_index(PC_XOR_CL_OFFSET, ctx, 10) == expect

    def test_pc_xor_byte_offset(self):
        ctx = FeatureContext(pc=0x400100, addr=0x3F)
        expect = fold_reference(0x400100, 10) ^ 0x3F
        assert feature_index(PC_XOR_BYTE_OFFSET, ctx, 10) == expect

    def test_pc_plus_first(self):
        ctx0 = FeatureContext(pc=0x99, addr=0, first_access=0)
        ctx1 = FeatureContext(pc=0x99, addr=0, first_access=1)
        assert feature_index(PC_PLUS_FIRST, ctx0, 10) == \
            fold_reference(0x99 << 1, 10)
        assert feature_index(PC_PLUS_FIRST, ctx1, 10) == \
            fold_reference((0x99 << 1) | 1, 10)

    def test_cl_offset_plus_first(self):
        ctx = FeatureContext(pc=1, addr=5 << 6, first_access=1)
        assert feature_index(CL_OFFSET_PLUS_FIRST, ctx, 7) == (5 << 1) | 1

    def test_last4(self):
        pcs = (0x10, 0x20, 0x30, 0x40)
        ctx = FeatureContext(pc=1, addr=0, last4_pcs=pcs)
        mixed = 0x10 ^ rotl64(0x20, 1) ^ rotl64(0x30, 2) ^ rotl64(0x40, 3)
        assert last4_mix(pcs) == mixed
        assert feature_index(LAST4_PCS, ctx, 10) == fold_reference(mixed, 10)

    def test_leveling(self):
        ctx = FeatureContext(pc=1, addr=3 << 6, flp_pred=1)
        assert feature_index(FLP_PRED_PLUS_CL_OFFSET, ctx, 7) == (1 << 6) | 3

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            feature_index("nonsense", FeatureContext(pc=1, addr=0), 10)

    def test_indices_within_tables(self):
        cfg = PerceptronConfig()
        p = HashedPerceptron(SLP_FEATURES, cfg)
        ctx = FeatureContext(pc=(1 << 64) - 1, addr=(1 << 64) - 1,
                             first_access=1,
                             last4_pcs=((1 << 64) - 1,) * 4, flp_pred=1)
        for idx, b in zip(p.indices(ctx), p.bits):
            assert 0 <= idx < (1 << b)


class TestClassification:
    def test_three_way_boundaries(self):
        # High strictly above tau_high; the delayed band is inclusive of
        # both tau_low and tau_high.
        assert classify_flp(41, 40, -8) == HIGH_OFFCHIP
        assert classify_flp(40, 40, -8) == DELAYED_OFFCHIP
        assert classify_flp(-8, 40, -8) == DELAYED_OFFCHIP
        assert classify_flp(-9, 40, -8) == ONCHIP

    def test_collapsed_thresholds(self):
        assert classify_flp(0, 0, 0) == DELAYED_OFFCHIP
        assert classify_flp(1, 0, 0) == HIGH_OFFCHIP
        assert classify_flp(-1, 0, 0) == ONCHIP

    def test_clamp(self):
        assert clamp_confidence(100) == WEIGHT_MAX == 15
        assert clamp_confidence(-100) == WEIGHT_MIN == -16
        assert clamp_confidence(7) == 7


class TestTraining:
    def make(self, theta=14):
        cfg = PerceptronConfig(theta_train=theta)
        return HashedPerceptron(FLP_FEATURES, cfg)

    def ctx(self, pc=0x400100):
        return FeatureContext(pc=pc, addr=0x1234C0, first_access=1,
                              last4_pcs=(1, 2, 3, 4))

    def test_training_moves_sum(self):
        p = self.make()
        conf, idx = p.predict(self.ctx())
        assert conf == 0
        p.train(idx, went_offchip=True, conf_at_predict=0)
        assert p.sum_at(idx) == len(FLP_FEATURES)
        p.train(idx, went_offchip=False, conf_at_predict=5)
        assert p.sum_at(idx) == 0

    def test_update_skipped_when_confidently_correct(self):
        p = self.make(theta=2)
        _, idx = p.predict(self.ctx())
        for _ in range(5):
            p.train(idx, True, p.sum_at(idx))
        # Sum is now 15 > theta and the prediction is correct: frozen.
        before = p.sum_at(idx)
        p.train(idx, True, before)
        assert p.sum_at(idx) == before

    def test_update_at_theta_boundary(self):
        p = self.make(theta=14)
        _, idx = p.predict(self.ctx())
        p.train(idx, True, 14)      # |conf| == theta: still updates
        assert p.sum_at(idx) == 5
        p.train(idx, True, 15)      # |conf| > theta and correct: frozen
        assert p.sum_at(idx) == 5

    def test_mismatch_always_updates(self):
        p = self.make(theta=2)
        _, idx = p.predict(self.ctx())
        p.train(idx, went_offchip=False, conf_at_predict=100)
        assert p.sum_at(idx) == -len(FLP_FEATURES)

    @given(st.lists(st.tuples(st.booleans(), st.integers(-80, 80)),
                    max_size=80))
    @settings(max_examples=100)
    def test_weights_always_saturate(self, events):
        p = self.make()
        _, idx = p.predict(self.ctx())
        for went, conf in events:
            p.train(idx, went, conf)
            for t in p.tables:
                assert all(WEIGHT_MIN <= w <= WEIGHT_MAX for w in t)


class TestConfig:
    def test_defaults_valid(self):
        PerceptronConfig().validate()

    def test_tau_order(self):
        with pytest.raises(ValueError):
            PerceptronConfig(tau_high=0, tau_low=10).validate()

    def test_unreachable_threshold(self):
        with pytest.raises(ValueError):
            PerceptronConfig(tau_high=200).validate()

    def test_storage_bits(self):
        cfg = PerceptronConfig()
        flp = HashedPerceptron(FLP_FEATURES, cfg)
        slp = HashedPerceptron(SLP_FEATURES, cfg)
        # 5-bit weights; tables of 2^10, 2^10, 2^10, 2^7, 2^10 (+2^7).
        assert flp.storage_bits() == 5 * (4 * 1024 + 128)
        assert slp.storage_bits() == 5 * (4 * 1024 + 2 * 128)
        assert flp.storage_bits() / 8 == 2640       # 2.58 KB
        assert slp.storage_bits() / 8 == 2720       # 2.66 KB

    def test_table_bits_match_documented_sizes(self):
        assert DEFAULT_TABLE_BITS == {
            PC_XOR_CL_OFFSET: 10, PC_XOR_BYTE_OFFSET: 10, PC_PLUS_FIRST: 10,
            CL_OFFSET_PLUS_FIRST: 7, LAST4_PCS: 10,
            FLP_PRED_PLUS_CL_OFFSET: 7,
        }
