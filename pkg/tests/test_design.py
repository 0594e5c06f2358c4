#!/usr/bin/env python
"""
Design matrix and parameter box tests

Usage:
    pytest tests/test_design.py -v
"""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lslasso import rng
from lslasso.design import (DesignMatrix, ParamDomain, check_feasibility, column_scales,
                            first_infeasible_row, index_range, read_response,
                            weighted_l1_diameter)
from lslasso.enums import Stream
from lslasso.errors import DomainError

logger = logging.getLogger(__name__)


class TestDesignMatrix:
    """Validation and CSV input of designs"""

    @pytest.mark.design
    def test_read_only(self):
        X = DesignMatrix(np.ones((3, 2)))
        assert (X.N, X.p) == (3, 2)
        with pytest.raises(ValueError):
            X.values[0, 0] = 5.0

    @pytest.mark.design
    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            DesignMatrix(np.array([[1.0, np.nan]]))

    @pytest.mark.design
    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            DesignMatrix(np.zeros((0, 3)))

    @pytest.mark.design
    def test_csv_round_trip(self, tmp_path, seeded_gaussian_design):
        path = DesignMatrix(seeded_gaussian_design).to_csv(tmp_path / "X.csv")
        back = DesignMatrix.from_csv(path)
        assert np.array_equal(back.values, seeded_gaussian_design)

    @pytest.mark.design
    def test_csv_with_header(self, tmp_path):
        path = tmp_path / "X.csv"
        path.write_text("a,b\n1,2\n3,4\n")
        X = DesignMatrix.from_csv(path, header=True)
        assert X.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    @pytest.mark.design
    def test_non_numeric_csv(self, tmp_path):
        path = tmp_path / "X.csv"
        path.write_text("1,2\n3,x\n")
        with pytest.raises(DomainError):
            DesignMatrix.from_csv(path)

    @pytest.mark.design
    def test_read_response_column(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("id,y\n1,0\n2,1\n")
        assert read_response(path, column="y").tolist() == [0.0, 1.0]
        with pytest.raises(DomainError):
            read_response(path, column="missing")
        with pytest.raises(DomainError):
            read_response(path, header=True)


class TestParamDomain:
    """Boxes, vertices and diameters"""

    @pytest.mark.design
    def test_requires_lower_below_upper(self):
        with pytest.raises(DomainError):
            ParamDomain(np.array([0.0, 1.0]), np.array([1.0, 1.0]))

    @pytest.mark.design
    def test_vertices(self, unit_box_2):
        vertices = unit_box_2.vertex_array()
        assert vertices.shape == (4, 2)
        assert vertices[0].tolist() == [-0.5, -0.5]
        assert vertices[-1].tolist() == [0.5, 0.5]
        assert np.array_equal(np.array(list(unit_box_2.vertices())), vertices)

    @pytest.mark.design
    def test_diameters(self):
        assert weighted_l1_diameter(ParamDomain.box(3, -1.0, 1.0), np.ones(3)) == (6.0, 6.0)
        assert weighted_l1_diameter(ParamDomain.box(2, 0.0, 1.0), [2.0, 3.0]) == (5.0, 2.0)
        with pytest.raises(DomainError):
            weighted_l1_diameter(ParamDomain.box(2, 0.0, 1.0), [1.0])

    @pytest.mark.design
    def test_contains_and_clip(self, unit_box_2):
        assert unit_box_2.contains([0.5, -0.5])
        assert not unit_box_2.contains([0.6, 0.0])
        assert unit_box_2.clip([2.0, -2.0]).tolist() == [0.5, -0.5]


class TestScalesAndFeasibility:
    """Column scales and the working-interval check"""

    @pytest.mark.design
    def test_column_scales(self):
        X = np.array([[3.0, 1.0], [-4.0, 2.0], [0.0, -0.5]])
        assert column_scales(X).tolist() == [4.0, 2.0]

    @pytest.mark.design
    def test_zero_column(self):
        with pytest.raises(DomainError):
            column_scales(np.array([[1.0, 0.0], [2.0, 0.0]]))

    @pytest.mark.design
    def test_identity_feasibility(self):
        X = np.eye(2)
        assert check_feasibility(X, ParamDomain.box(2, -0.5, 0.5), (-1.0, 1.0))
        assert not check_feasibility(X, ParamDomain.box(2, -2.0, 2.0), (-1.0, 1.0))
        assert first_infeasible_row(X, ParamDomain.box(2, -2.0, 2.0), (-1.0, 1.0)) == 0

    @pytest.mark.design
    def test_rademacher_stream_design_is_feasible(self):
        gen = rng.stream(7, 0, Stream.DESIGN)
        X = gen.choice([-1.0, 1.0], size=(50, 8))
        assert check_feasibility(X, ParamDomain.box(8, -0.5, 0.5), (-4.5, 4.5))


@pytest.mark.design
@settings(max_examples=100, deadline=None)
@given(X=arrays(np.float64, (4, 3), elements=st.floats(-3.0, 3.0)),
       low=st.floats(-2.0, -0.1), high=st.floats(0.1, 2.0))
def test_index_range_matches_vertices(X, low, high):
    dom = ParamDomain.box(3, low, high)
    lo, hi = index_range(X, dom)
    products = X @ dom.vertex_array().T
    assert np.allclose(lo, products.min(axis=1), atol=1e-12)
    assert np.allclose(hi, products.max(axis=1), atol=1e-12)
