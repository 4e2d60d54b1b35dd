"""Datasets bundled with the package."""

import numpy as np

from dcc.core import Dataset
from dcc.errors import UnknownDataset

EARTHQUAKE_YEARS = tuple(range(1980, 2018))

# yearly worldwide earthquake counts above a magnitude, 1980-2017 (USGS catalog)
EARTHQUAKE_COUNTS = {
    8: (
        0, 0, 0, 0, 0, 2, 1, 0, 0, 1, 0, 0, 0, 0, 2, 2, 1, 0, 1,
        0, 1, 1, 0, 1, 2, 1, 2, 4, 0, 1, 1, 1, 2, 2, 1, 1, 0, 1,
    ),
    7: (
        6, 10, 7, 14, 14, 15, 11, 13, 11, 8, 18, 17, 13, 12, 13, 20, 15, 16, 12,
        18, 15, 16, 13, 15, 16, 11, 11, 18, 12, 17, 24, 20, 16, 19, 12, 19, 16, 7,
    ),
    6: (
        96, 88, 90, 139, 141, 162, 140, 173, 126, 139, 154, 137, 179, 148, 159, 201, 164, 136, 121,
        136, 160, 137, 139, 156, 157, 151, 153, 196, 179, 161, 175, 207, 133, 142, 155, 146, 146, 111,
    ),
    5: (
        1408, 1265, 1505, 1802, 1683, 1806, 1765, 1572, 1598, 1561, 1765, 1583, 1675, 1564, 1693, 1501, 1373, 1234, 1074,
        1192, 1495, 1352, 1309, 1364, 1672, 1843, 1877, 2283, 1965, 2075, 2395, 2692, 1680, 1596, 1729, 1558, 1696, 1560,
    ),
}

# kangaroo transect counts: (fractional year, count 1, count 2)
KANGAROO_TIMES = (
    1973.497, 1973.75, 1974.163, 1974.413, 1974.665, 1975.002, 1975.245, 1975.497,
    1975.75, 1976.078, 1976.33, 1976.582, 1976.917, 1977.245, 1977.497, 1977.665,
    1978.002, 1978.33, 1978.582, 1978.832, 1979.078, 1979.582, 1979.832, 1980.163,
    1980.497, 1980.75, 1980.917, 1981.163, 1981.497, 1981.665, 1981.917, 1982.163,
    1982.413, 1982.665, 1982.917, 1983.163, 1983.413, 1983.665, 1983.917, 1984.163,
    1984.413,
)
KANGAROO_COUNTS = (
    (267, 326), (333, 144), (159, 145), (145, 138), (340, 413), (463, 531), (305, 331), (329, 329),
    (575, 529), (227, 318), (532, 449), (769, 852), (526, 332), (565, 742), (466, 479), (494, 620),
    (440, 531), (858, 751), (599, 442), (298, 824), (529, 660), (912, 834), (703, 955), (402, 453),
    (669, 953), (796, 808), (483, 975), (700, 627), (418, 851), (979, 721), (757, 1112), (755, 731),
    (517, 748), (710, 675), (240, 272), (490, 292), (497, 389), (250, 323), (271, 272), (303, 248),
    (386, 290),
)

# noisy cubic on an even grid over [-25, 25]
REGRESSION_X = tuple(np.linspace(-25.0, 25.0, 50))
REGRESSION_Y = (
    3336.20, 2951.70, 2590.67, 2262.55, 1964.10, 1692.86, 1447.00, 1227.21, 1028.55, 854.29,
    696.39, 564.20, 442.33, 346.84, 260.04, 190.73, 129.48, 85.77, 56.17, 32.71,
    10.98, 2.40, -0.06, -0.68, -5.61, 0.04, 5.74, 12.94, 8.81, 8.96,
    5.38, -9.69, -28.84, -58.83, -94.85, -143.87, -208.37, -279.07, -371.65, -480.45,
    -601.76, -746.54, -908.29, -1090.53, -1300.16, -1528.91, -1785.80, -2066.44, -2372.47, -2715.46,
)

NAMES = ("earthquake-m8", "earthquake-m7", "earthquake-m6", "earthquake-m5", "kangaroo",
         "regression-cubic")


def embedded_dataset(name: str) -> Dataset:
    if name.startswith("earthquake-m"):
        try:
            counts = EARTHQUAKE_COUNTS[int(name[len("earthquake-m"):])]
        except (KeyError, ValueError):
            raise UnknownDataset(f"unknown dataset {name!r}") from None
        return Dataset(np.array(counts, dtype=float)[:, None],
                       np.array(EARTHQUAKE_YEARS, dtype=float))
    if name == "kangaroo":
        return Dataset(np.array(KANGAROO_COUNTS, dtype=float), np.array(KANGAROO_TIMES))
    if name == "regression-cubic":
        return Dataset(np.array(REGRESSION_Y)[:, None], np.array(REGRESSION_X))
    raise UnknownDataset(f"unknown dataset {name!r}; choose from {', '.join(NAMES)}")
