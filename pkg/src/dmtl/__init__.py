"""datalogMTL reasoning engine: datalog with metric temporal operators over
dense time, evaluated by bottom-up materialisation, with SQL rewriting for
the nonrecursive fragment and CSV threshold ingestion.
"""

from dmtl.temporal import (
    Interval,
    Range,
    TimePoint,
    NEG_INF,
    POS_INF,
    closure,
    fits,
    gcd_dyadic,
    intersect,
    interval_precedes,
    minus_c,
    minus_o,
    parse_interval,
    parse_point,
    plus_c,
    plus_o,
    union_if_interval,
)

__version__ = "0.1.0"
