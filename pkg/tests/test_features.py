"""Bag-of-words extraction and the lexical quality scanner."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from devminer.errors import EncodingError
from devminer.features import (
    QualityScanner,
    bow_extract,
    read_bow_csv,
    read_quality_csv,
    scan_quality,
    write_bow_csv,
    write_quality_csv,
)


def test_bow_basic_tokens():
    vec = bow_extract("package { 'ntp': }")
    assert vec.token_counts == {"package": 1, "ntp": 1}


def test_bow_empty():
    assert bow_extract("").token_counts == {}


def test_bow_case_folding():
    assert bow_extract("A a A").token_counts == {"a": 3}


def test_bow_encoding_error_offset():
    with pytest.raises(EncodingError) as err:
        bow_extract(b"abc\xff\xfedef")
    assert err.value.offset == 3


@settings(max_examples=60, deadline=None)
@given(
    a=st.text(alphabet="ab c{}$:=>'\n", max_size=40),
    b=st.text(alphabet="ab c{}$:=>'\n", max_size=40),
)
def test_bow_concat_additivity(a, b):
    merged = bow_extract(a + "\n" + b).token_counts
    left = bow_extract(a).token_counts
    right = bow_extract(b).token_counts
    expected = dict(left)
    for token, count in right.items():
        expected[token] = expected.get(token, 0) + count
    assert merged == expected


NTP_SCRIPT = """\
class ntp($servers, $ensure) {
  if $ensure == 'present' {
    package { 'ntp': ensure => installed }
  } else {
    service { 'ntp': ensure => stopped }
  }
}
"""

CASE_SCRIPT = """\
class osdeps {
  case $facts['os']['family'] {
    'Debian': {
      exec { 'apt-update': command => '/usr/bin/apt update' }
    }
    'RedHat': {
      exec { 'yum-update': command => '/usr/bin/yum update' }
    }
    default: {
      notice('unsupported')
    }
  }
}
"""


def test_complexity_single_if():
    vec = scan_quality(NTP_SCRIPT, "ntp.pp", {})
    assert vec.complexity == 1


def test_parameters_in_signature():
    vec = scan_quality(NTP_SCRIPT, "ntp.pp", {})
    assert vec.parameters == 2


def test_case_alternatives_counted():
    vec = scan_quality(CASE_SCRIPT, "osdeps.pp", {})
    # one `case` keyword plus three alternatives (two named + default)
    assert vec.complexity == 4


def test_exec_count():
    assert scan_quality(CASE_SCRIPT, "osdeps.pp", {}).execs == 2
    assert scan_quality(NTP_SCRIPT, "ntp.pp", {}).execs == 0


def test_filelength_physical_lines():
    assert scan_quality("a\nb\nc\n", "x.pp", {}).filelength == 3
    assert scan_quality("a\nb", "x.pp", {}).filelength == 2
    assert scan_quality("", "x.pp", {}).filelength == 0


def test_fan_in_three_includers():
    scripts = {
        "ntp.pp": "class ntp {\n}\n",
        "one.pp": "class one {\n  include ntp\n}\n",
        "two.pp": "class two {\n  include ntp\n}\n",
        "three.pp": "class three {\n  require ntp\n}\n",
    }
    scanner = QualityScanner(scripts)
    assert scanner.scan("ntp.pp").fan_in == 3
    assert scanner.scan("one.pp").fan_in == 0


def test_fan_in_ambiguous_duplicate_class():
    scripts = {
        "a.pp": "class shared {\n}\n",
        "b.pp": "class shared {\n}\n",
        "c.pp": "include shared\n",
    }
    scanner = QualityScanner(scripts)
    assert scanner.scan("a.pp").fan_in == 1
    assert scanner.scan("b.pp").fan_in == 1
    assert scanner.total_resolutions == 2


def test_fan_in_sum_equals_total_resolutions():
    scripts = {
        "ntp.pp": "class ntp {\n}\nclass ntp::config {\n}\n",
        "one.pp": "class one {\n include ntp\n include ntp::config\n}\n",
        "two.pp": "class two {\n include ntp\n}\n",
        "self.pp": "class selfish {\n include selfish\n}\n",
    }
    scanner = QualityScanner(scripts)
    total = sum(scanner.scan(p).fan_in for p in scripts)
    assert total == scanner.total_resolutions
    assert scanner.scan("self.pp").fan_in == 0  # self-includes do not count


def test_lint_warnings_imported_or_zero():
    scanner = QualityScanner({"a.pp": "class a {}"}, {"a.pp": 4})
    assert scanner.scan("a.pp").lint_warnings == 4
    scanner_default = QualityScanner({"a.pp": "class a {}"})
    assert scanner_default.scan("a.pp").lint_warnings == 0


@settings(max_examples=60, deadline=None)
@given(st.text(max_size=300))
def test_scanner_total_on_arbitrary_text(text):
    vec = scan_quality(text, "any.pp", {})
    assert vec.filelength >= 0
    assert vec.complexity >= 0
    assert vec.parameters >= 0
    assert vec.execs >= 0
    assert vec.fan_in >= 0


def test_scanner_deterministic():
    a = scan_quality(CASE_SCRIPT, "x.pp", {})
    b = scan_quality(CASE_SCRIPT, "x.pp", {})
    assert a == b


def test_bow_csv_round_trip(tmp_path):
    vectors = [bow_extract("alpha beta beta", "a.pp"), bow_extract("gamma", "b.pp")]
    path = tmp_path / "bow.csv"
    write_bow_csv(vectors, path)
    parsed = read_bow_csv(path)
    assert parsed[0].token_counts == {"alpha": 1, "beta": 2}
    assert parsed[1].token_counts == {"gamma": 1}


def test_quality_csv_round_trip(tmp_path):
    vectors = [scan_quality(NTP_SCRIPT, "ntp.pp", {}), scan_quality(CASE_SCRIPT, "case.pp", {})]
    path = tmp_path / "quality.csv"
    write_quality_csv(vectors, path)
    assert read_quality_csv(path) == vectors
