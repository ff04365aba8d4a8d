import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import toy_records
from mpnet.dataset import Dataset, MeltpoolRecord, Process
from mpnet.errors import EmptyMatrixError, EncodingError, PhysicsDomainError, PropertyCoverageError
from mpnet.featurize import (
    FeatureGroup,
    FeatureSpec,
    LeakageWarning,
    Target,
    absorptivity1,
    absorptivity2,
    assemble,
    baseline_spec,
    featurize_query,
    one_hot,
)
from mpnet.materials import lookup_material
from mpnet.synth import make_classification_dataset, make_regression_dataset


class TestOneHot:
    def test_single_category_all_ones(self):
        names, rows = one_hot(["LPBF", "LPBF", "LPBF"])
        assert names == ["LPBF"]
        assert np.all(rows == 1.0)

    def test_lpbf_over_full_set(self):
        _, rows = one_hot(["LPBF"], ["EBAM", "EPBF", "LENS", "LPBF"])
        assert rows.tolist() == [[0.0, 0.0, 0.0, 1.0]]

    def test_row_sums_are_one(self):
        values = ["LENS", "EBAM", "LPBF", "EPBF", "LENS"]
        _, rows = one_hot(values)
        assert np.all(rows.sum(axis=1) == 1.0)

    def test_out_of_set_value_raises(self):
        with pytest.raises(EncodingError, match="SLM"):
            one_hot(["SLM"], ["LPBF"])


TI64 = lookup_material("Ti-6Al-4V")
SS = lookup_material("SS316L")


class TestAbsorptivity1:
    def test_vanishes_as_power_to_zero(self):
        assert absorptivity1(1e-9, 1.0, 50e-6, TI64, 298.0, 0.3) < 1e-6

    def test_saturates_at_0p7(self):
        assert absorptivity1(1e9, 1.0, 50e-6, TI64, 298.0, 0.3) == pytest.approx(0.7)

    def test_scalar_oracle(self):
        # direct evaluation of the keyhole absorptivity expression
        p, v, r0, t0, eta_m = 200.0, 1.0, 50e-6, 298.0, 0.3
        x = 0.6 * eta_m * p / (
            (TI64.melting_temp - t0) * math.pi * TI64.density * TI64.specific_heat * v * r0**2
        )
        expected = 0.7 * (1.0 - math.exp(-x))
        assert absorptivity1(p, v, r0, TI64, t0, eta_m) == pytest.approx(expected, rel=1e-12)

    def test_monotone_in_power_and_speed(self):
        lo = absorptivity1(100, 1.0, 50e-6, TI64, 298.0, 0.3)
        hi = absorptivity1(200, 1.0, 50e-6, TI64, 298.0, 0.3)
        fast = absorptivity1(100, 2.0, 50e-6, TI64, 298.0, 0.3)
        assert lo < hi and fast < lo

    def test_domain_errors(self):
        with pytest.raises(PhysicsDomainError):
            absorptivity1(100, 1.0, 0.0, TI64, 298.0, 0.3)
        with pytest.raises(PhysicsDomainError):
            absorptivity1(100, 1.0, 50e-6, TI64, 2000.0, 0.3)

    @given(
        st.floats(1.0, 2000.0),
        st.floats(0.01, 5.0),
        st.floats(5e-6, 300e-6),
        st.floats(0.05, 0.95),
    )
    @settings(max_examples=200, deadline=None)
    def test_strictly_inside_bounds(self, p, v, r0, eta_m):
        eta = absorptivity1(p, v, r0, SS, 298.15, eta_m)
        assert 0.0 < eta < 0.7


class TestAbsorptivity2:
    def test_vanishes_with_width(self):
        assert absorptivity2(150, 0.8, 1e-12, SS, 298.0) < 1e-6

    def test_doubling_power_halves_eta(self):
        one = absorptivity2(150, 0.8, 100e-6, SS, 298.0)
        two = absorptivity2(300, 0.8, 100e-6, SS, 298.0)
        assert two == pytest.approx(one / 2, rel=1e-12)

    def test_scalar_oracle(self):
        p, v, w, t0 = 150.0, 0.8, 100e-6, 298.0
        dt = SS.melting_temp - t0
        expected = (
            math.pi * SS.conductivity * dt * w
            + math.e * math.pi * SS.density * SS.specific_heat * dt * v * w**2 / 8.0
        ) / p
        assert absorptivity2(p, v, w, SS, t0) == pytest.approx(expected, rel=1e-12)


class TestAssemble:
    def test_baseline_regression_has_10_columns(self, reg_dataset):
        m = assemble(reg_dataset, baseline_spec(Target.DEPTH))
        assert m.d == 10
        assert m.column_names[:4] == (
            "process=EBAM", "process=EPBF", "process=LENS", "process=LPBF",
        )
        assert m.column_names[4:] == ("power", "velocity", "rho", "cp", "k", "tm")

    def test_baseline_classification_has_11_columns(self, cls_dataset):
        m = assemble(cls_dataset, baseline_spec(Target.DEFECT_CLASS))
        assert m.d == 11
        assert "beam_diameter" in m.column_names

    def test_elemental_adds_5_columns(self, reg_dataset):
        m = assemble(
            reg_dataset,
            baseline_spec(Target.DEPTH, extra=(FeatureGroup.ELEMENTAL_FEATURES,)),
        )
        assert m.d == 15
        assert m.column_names[-5:] == (
            "elem_atomic_number", "elem_atomic_volume", "elem_ionization_energy",
            "elem_heat_of_fusion", "elem_electron_affinity",
        )

    def test_chemical_composition_adds_19_columns(self, reg_dataset):
        m = assemble(
            reg_dataset,
            baseline_spec(Target.DEPTH, extra=(FeatureGroup.CHEMICAL_COMPOSITION,)),
        )
        assert m.d == 29
        assert m.column_names[10] == "wt_Y" and m.column_names[-1] == "wt_Mo"

    def test_deterministic_bit_identical(self, reg_dataset):
        spec = baseline_spec(Target.DEPTH, extra=(FeatureGroup.ABSORPTIVITY1,))
        a = assemble(reg_dataset, spec)
        b = assemble(reg_dataset, spec)
        assert np.array_equal(a.rows, b.rows)
        assert a.column_names == b.column_names

    def test_dropping_group_keeps_shared_columns(self, reg_dataset):
        small = assemble(reg_dataset, baseline_spec(Target.DEPTH))
        big = assemble(
            reg_dataset, baseline_spec(Target.DEPTH, extra=(FeatureGroup.HATCH_SPACING,))
        )
        shared = [big.column_names.index(c) for c in small.column_names]
        kept = np.isin(small.row_index, big.row_index)
        lookup = {idx: i for i, idx in enumerate(big.row_index)}
        rows_big = big.rows[[lookup[i] for i in small.row_index[kept]]][:, shared]
        assert np.array_equal(small.rows[kept], rows_big)

    def test_rows_without_target_dropped(self, sample_path):
        from mpnet.dataset import load_dataset

        ds = load_dataset(sample_path)
        m = assemble(ds, baseline_spec(Target.LENGTH))
        assert m.n == sum(1 for r in ds if r.length is not None)

    def test_zero_rows_names_binding_constraint(self):
        ds = toy_records(5, missing_diameter=True)  # depth/width present, no diameter
        spec = baseline_spec(Target.DEPTH, extra=(FeatureGroup.ABSORPTIVITY1,))
        with pytest.raises(EmptyMatrixError, match="beam_diameter"):
            assemble(ds, spec)

    def test_width_with_absorptivity2_warns_leakage(self, reg_dataset):
        spec = baseline_spec(Target.WIDTH, extra=(FeatureGroup.ABSORPTIVITY2,))
        with pytest.warns(LeakageWarning):
            assemble(reg_dataset, spec)

    def test_material_without_thermal_props_rejected(self):
        rec = MeltpoolRecord(
            source_id="x", process=Process.LPBF, material_name="Zn-2Al",
            power=100.0, velocity=1.0, depth=50e-6,
        )
        with pytest.raises(PropertyCoverageError, match="Zn-2Al"):
            assemble(Dataset(records=(rec,)), baseline_spec(Target.DEPTH))

    def test_classification_target_values_are_class_ids(self, cls_dataset):
        m = assemble(cls_dataset, baseline_spec(Target.DEFECT_CLASS))
        assert m.target_values.dtype.kind == "i"
        assert set(np.unique(m.target_values)) <= {0, 1, 2, 3}


class TestFeatureSpecJson:
    def test_round_trip(self):
        spec = baseline_spec(Target.DEPTH, extra=(FeatureGroup.ABSORPTIVITY1,), ambient_temp=300.0)
        again = FeatureSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
        assert again == spec

    def test_snake_case_group_names(self):
        doc = baseline_spec(Target.DEFECT_CLASS).to_dict()
        assert "process_one_hot" in doc["groups"]
        assert doc["target"] == "defect_class"


class TestFeaturizeQuery:
    def test_aligns_with_assembled_row(self, cls_dataset):
        spec = baseline_spec(
            Target.DEFECT_CLASS,
            extra=(FeatureGroup.LAYER_THICKNESS, FeatureGroup.ABSORPTIVITY1,
                   FeatureGroup.MATERIAL_ONE_HOT),
        )
        m = assemble(cls_dataset, spec)
        record = cls_dataset[int(m.row_index[7])]
        row = featurize_query(spec, m.column_names, record)
        assert row == pytest.approx(m.rows[7], rel=1e-15)

    def test_refuses_absorptivity2(self):
        spec = baseline_spec(Target.DEPTH, extra=(FeatureGroup.ABSORPTIVITY2,))
        rec = toy_records(1)[0]
        with pytest.raises(PropertyCoverageError, match="absorptivity2"):
            featurize_query(spec, ("x",), rec)

    def test_missing_required_feature_named(self):
        spec = baseline_spec(Target.DEFECT_CLASS)
        rec = MeltpoolRecord(
            source_id="q", process=Process.LPBF, material_name="SS316L",
            power=100.0, velocity=1.0,
        )
        with pytest.raises(EncodingError, match="beam_diameter"):
            featurize_query(spec, ("a",) * 11, rec)

    def test_unknown_material_category(self, cls_dataset):
        spec = baseline_spec(Target.DEFECT_CLASS, extra=(FeatureGroup.MATERIAL_ONE_HOT,))
        m = assemble(cls_dataset, spec)
        rec = MeltpoolRecord(
            source_id="q", process=Process.LPBF, material_name="WE43",
            power=100.0, velocity=1.0, beam_diameter=80e-6,
        )
        with pytest.raises(EncodingError):
            featurize_query(spec, m.column_names, rec)
