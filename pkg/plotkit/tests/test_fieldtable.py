import numpy as np
import pytest

from plotkit import FieldTable, MalformedCSV

SAMPLE = """x,y,class,value
0.0,0.0,E,0.0
0.5,0.0,B,1.0
1.0,0.0,E,0.0
0.0,0.5,B,0.30000000000000004
0.5,0.5,I,9.999999999999999e-01
1.0,0.5,B,2e-3
0.0,1.0,E,0.0
0.5,1.0,B,-1.25
1.0,1.0,E,0.0
"""


def test_round_trip_is_string_identical(tmp_path):
    src = tmp_path / "field.csv"
    src.write_text(SAMPLE)
    table = FieldTable.read(src)
    out = tmp_path / "copy.csv"
    table.write(out)
    assert out.read_text() == SAMPLE  # awkward float spellings survive


def test_parsed_arrays(tmp_path):
    src = tmp_path / "field.csv"
    src.write_text(SAMPLE)
    table = FieldTable.read(src)
    assert table.values.shape == (3, 3)
    assert table.classes[1, 1] == "I"
    assert table.values[1, 1] == pytest.approx(1.0)
    assert table.values[1, 2] == pytest.approx(0.002)
    assert np.array_equal(table.xs, [0.0, 0.5, 1.0])
    assert table.spacing == 0.5


@pytest.mark.parametrize("content,line_no", [
    ("x,y,value\n0,0,1\n", 1),                                  # bad header
    ("x,y,class,value\n0,0,I\n", 2),                            # short row
    ("x,y,class,value\n0,0,Q,1\n", 2),                          # bad class
    ("x,y,class,value\n0,0,I,abc\n", 2),                        # bad float
    ("x,y,class,value\n0,0,I,1\n1,1,I,1\n", 2),                 # ragged lattice
])
def test_malformed_inputs_report_line(tmp_path, content, line_no):
    src = tmp_path / "bad.csv"
    src.write_text(content)
    with pytest.raises(MalformedCSV) as err:
        FieldTable.read(src)
    assert err.value.line_no == line_no
