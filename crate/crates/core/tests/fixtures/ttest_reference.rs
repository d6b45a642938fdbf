// (differences, t, two-sided p, df) computed with mpmath at 50 digits
const REFERENCE_BATTERY: &[(&[f64], f64, f64, usize)] = &[
    (&[1.0, 2.0, 3.0], 3.4641016151377546, 0.074179900227448538, 2),
    (&[0.5, -0.25], 0.33333333333333333, 0.79516723530086655, 1),
    (&[1.0, 1.0, 1.0, 2.0], 5.0, 0.015392438073302301, 3),
    (&[-3.2, -1.1, -2.7, -0.4, -5.0], -3.0586996328292502, 0.037706336621992624, 4),
    (&[0.8444, -0.3897, 0.5433, -0.4583, 2.0449, 0.667, 0.0508, 1.7659, 1.1736, -0.2691, 0.4893, -1.0155], 1.7039515778477025, 0.11643830174873095, 11),
    (&[0.577, 0.5756, 0.9442], 5.6993438807730356, 0.029433361501450915, 2),
    (&[-0.2824, 0.3693, 2.314, -1.4673, -1.4213, -1.9495, 1.3619, 0.1023, -0.936, -0.8866, -2.6365, -1.1667, -0.7173, -1.6573, 1.0224, -2.5852, -0.799, -1.0173, -2.0016, -0.7902, -1.1387, -1.5039, 1.9231, -0.6226, -1.2687, 0.5554, 0.2839, -0.4845, -1.1777, 0.0606], -2.7921573332531392, 0.0091712436817933363, 29),
    (&[-1.8431, 0.2868, -1.5511, -0.6896], -1.9806047943512483, 0.14197394842671497, 3),
    (&[-1.6734, -1.1866, -0.3271, 0.4002, -1.37, -0.7681, -1.4197, -0.9928, -2.321, -3.3361, -1.8166, -1.9075], -5.0352702190089939, 0.00038078570063185156, 11),
    (&[-1.1985, -0.0882, -2.0213, 0.1029], -1.6100116930800382, 0.2057744206542224, 3),
    (&[-0.274, -0.5006, -0.4628, 2.1927, 1.5246, 0.077, 1.4883, 0.2134, 0.7834, 0.7049, 1.6476, 2.0246, 0.3307, 0.8223, 1.2531, 2.4376, 1.2362, -1.919, -0.372, 1.5297, 0.8444, 0.5828, -1.2725, -0.3407, -1.1181, -0.9876, 1.9831, 1.7602, 1.3895, 2.072, 0.5263, 0.9393, 1.266, 1.3877, -0.0076, 1.6356, -0.2271, 1.7001, 1.1084, -1.4449, 1.483, 3.3767, 2.0677, -0.4716, 1.0864, -0.0428, -0.1441, 0.727, -0.5105, -1.3731, -0.013, 1.2217, 0.9514, 0.2655, 1.1683, 0.3635, -0.4734, -0.1833, -1.0871, -0.8131, 1.1833, 0.2765, 0.5539, 2.4107, 0.5923, -0.3513, 1.485, 0.1302, 1.3405, 0.261, -0.7, 1.6303, 0.033, -0.801, -0.7798], 4.3964247791256162, 3.6233962220718158e-5, 74),
    (&[-1.276, 0.5126, 1.1881, 0.2368, 0.9837, 0.3477, -0.376, 1.717, -0.2409, -1.4852, -0.1379, 0.6216, -0.0612, 1.7942, 1.3591, 0.3684, -0.3355, -0.3104, 0.177, -2.3584, 0.2802, 0.3799, 0.3748, -0.807, -1.5738, 0.0306, 0.1794, -0.9501, 0.6424, 0.7638, -1.3654, -0.6796, -1.5815, -1.3838, -2.3423, 0.2575, -0.309, 0.2234, -0.1951, -0.7216, 0.1564, -1.6127, 1.6034, -1.5348, -0.1492, 0.5853, -1.1227, -0.2465, -1.5322, -0.8658, -1.2145, 1.4898, -0.8903, -1.0454, 1.4388, 0.0917, 1.4644, 1.3735, 1.904, 0.0459, -0.4495, -1.1788, -0.9576, -2.1463, 2.0122, -1.0723, 1.3826, -0.0135, 0.793, -0.0322, -0.1743, 0.5739, -0.653, -1.8243, 1.8739, 0.5878, 1.0888, 1.2144, -1.604, 0.2607, -1.1843, -0.8189, -0.8327, 0.0241, 0.8041, 0.6275, 0.2668, -1.1815, 0.5069, -0.752, 0.7134, -2.5718, 1.0459, 0.5303, -1.1536, 0.1795, 1.1025, 0.7439, -1.9183, -1.0509, -0.9407, 1.2913, -0.4948, 1.3823, -0.6953, 1.0, -0.5631, -0.1447, -0.7636, -0.8136, -1.8712, -0.6639, 1.0848, -0.0174, -1.1934, 1.0396, 0.4024, -0.3576, -0.5641, 1.8931, -0.279, -0.5109, -2.2209, -0.3218, 0.9064, -2.3609, -0.3885, -1.0355, -1.6232, 0.2105, 2.6776, 0.3548, -0.2708, -1.6883, -0.0038, 0.1268, -1.6237, 1.2622, -0.2761, 0.872, -0.5692, -0.9207, -0.394, -0.4845, 1.4153, 1.3235, -0.0595, 1.3286, 0.3242, 0.827, 2.1353, 0.9137, 0.8472, -0.2178, 0.9182, -0.8484, -0.5096, -0.5623, 0.342, -1.0324, 0.85, 0.8372, 0.656, -1.0993, 0.0275, -2.2091, 0.7956, -0.4094, 0.354, 0.9475, 0.2127, 0.5392, 0.504, 0.1271, -1.0864, -0.2023, -0.2886, -1.0038, 0.3176, 0.166, -1.3412, -0.7386, -1.4243, 1.2091, -1.4933, -0.3615, -0.2214, -1.6701, -1.1575, -1.2497, -0.4191, 0.9465, -1.3862, 0.9528, 1.1562, 0.1623, -2.1007, 0.8386, -0.8237, 1.9446], -1.3890075538764127, 0.16638289912458189, 199),
    (&[0.2674, -2.4419], -0.80260583914664304, 0.56943631807755418, 1),
    (&[-0.4145, -1.0443, -0.2285, -2.2486, 0.1332, -0.2378, -0.4599, 0.942, 0.3958, 0.2526, -0.2391, -1.608], -1.5602427412547505, 0.14699256487311416, 11),
    (&[1.0383, 2.5724], 2.3536275340590574, 0.25577196737175567, 1),
    (&[0.3831, 0.8697], 2.5745992601726264, 0.23585184366015335, 1),
    (&[-0.6348, -1.2468, 0.3214, -0.3586, 1.2575, -1.0399, 0.3843, -2.0844], -1.132087670886082, 0.29488286674761456, 7),
    (&[-0.7618, 1.4081, -0.8022, 1.6996, -0.2727, 0.1423, 0.1063, -1.928, -0.5533, 0.5669, -0.2003, 0.6171, 2.8556, 0.4669, -0.6027, -0.8604, -1.2556, 0.8433, 0.5925, -0.2581, 0.9608, 0.935, 0.992, 0.4121, 0.6509, 0.2298, -0.3714, -1.4587, 1.4797, 0.4725, 0.5176, 0.2296, -1.3976, 0.3462, 1.1898, -1.0735, 0.7641, 0.6792, -0.0696, 0.8649, -0.8442, -0.4244, -0.631, 1.5563, 0.2258, 1.1853, 1.9526, 0.3706, 0.5258, -0.713, 0.6571, 0.0945, 0.1502, 0.2619, 0.8088, 0.0996, -0.3567, 1.1416, -0.7809, 0.2753, -0.0188, 2.0836, -0.7271, -2.3225, 0.5825, -0.0688, -1.084, -1.4809, -1.3888, 0.1803, 1.667, 2.2791, 0.4136, 0.5203, -0.7677, 0.0658, 0.4257, -0.3202, -1.5754, 0.8883, -1.2029, 0.0431, 2.0767, -0.7258, -1.0089, 0.9995, -0.8539, 1.7612, 1.0715, -2.6994, 0.768, -0.9169, -2.6252, 0.3658, 0.4195, 0.306, -0.1138, 0.4507, 0.6636, -0.6869, 0.0772, -2.2947, 1.4849, 0.8846, -0.5393, 1.1016, 0.2711, -0.67, 1.1099, 1.2734, 1.5568, 0.6413, -0.2448, 0.5438, 0.8607, -0.3379, 1.2899, -1.1732, 0.2522, 1.5708, 0.7269, 0.6049, -0.2185, -0.0225, -2.3325, 0.1264, -0.1882, -0.0437, 0.8975, 0.448, -0.4441, 1.1294, -1.0921, 0.2277, 0.5037, 0.3547, 0.5564, 0.47, 1.0092, 0.245, -1.095, 0.023, 0.7016, 0.6519, 1.6916, -0.5624, -0.583, -1.4637, -0.9675, -0.8072, -0.1514, 0.5435, 1.2374, 2.2239, 0.0051, 0.2665, -0.6042, 0.9657, 1.2082, 0.7663, -0.0137, -0.0639, 0.7431, 1.3884, 1.118, 0.2645, 0.6783, 0.1654, -0.6823, -0.315, 0.192, 0.1687, 0.72, 1.2669, 1.1196, 1.1603, -0.4538, -0.2658, 0.3771, -0.6824, -0.0372, 0.8778, -0.1905, 1.336, 1.3678, -0.3254, -0.2239, 1.1317, 0.2773, 1.9605, -2.5702, -0.6437, 0.6231, 0.8999, 0.2593, 1.2903, 0.4233, -0.5494, 1.1022, -0.5465], 2.8401591884351981, 0.0049776888534183494, 199),
    (&[3.5224, 0.7259, 3.1245, 2.6281, 3.085, 2.4646, 2.4357, 2.4496, 1.7143, 2.6228, 2.0681, 1.7222, 1.2105, 1.7274, 3.7068, 2.0831, 1.4789, 2.0468, 0.6663, 2.4633, 1.5935, 2.7214, 0.9547, 1.1807, 1.001, 2.1531, 0.6866, 1.2033, 2.5018, 0.2406, 2.6841, 3.4104, 1.3587, 1.1967, 1.9418, -0.4669, 0.3879, 2.8329, 2.2598, 1.4611, 2.1809, 1.4679, 2.1014, 1.5838, 2.0499, 4.3764, 1.1029, 1.8818, 2.2785, 2.6629, 1.5614, 3.9222, 2.0514, 1.4234, -0.0911, 3.4865, -0.2304, 1.9654, 0.171, 4.107, 2.4072, 1.658, 3.4451, 3.6734, 2.6016, 2.0051, 2.6427, 2.5088, 1.5393, 1.8852, 1.859, 1.9109, 2.0356, 2.294, 2.1746], 17.328080758043197, 9.2544854828659734e-28, 74),
    (&[-0.9457, -0.7223, -1.3005, 0.6442, -0.2495, 0.7319, 0.6923, -0.795, -0.9979, -0.3741, 0.0933, 1.7682, 0.0769, 0.371, -0.8984, 0.4575, 1.186, -2.0549, -0.4137, -2.8733, 0.2, -0.1356, -0.1684, -0.9356, 0.4839, 1.3121, 0.2181, 1.7187, 1.2771, -0.4938, 0.8296, 2.5345, 1.5061, -0.1631, -0.7742, 0.6311, -0.2366, 3.6956, 0.3728, -1.2073, 1.1871, 0.5859, 1.2096, -0.3769, -2.8488, -0.7949, 0.4209, 0.0931, 0.5464, -0.4663, 0.0101, 0.2974, 0.0622, -1.9564, 0.7016, 0.5191, -0.9746, -0.6893, -0.0099, -0.5501, -0.7253, 1.3347, -2.1346, -0.5584, 0.9314, 0.7496, -0.0757, 0.4559, -1.6852, 1.0974, -0.351, -0.3217, 0.0342, -0.7921, -1.72, -1.0197, -0.4624, -0.502, -0.3991, 0.2926, -2.3671, -1.9976, 1.6651, 2.2046, 0.326, -0.6525, 0.5447, 0.5517, 1.1773, -0.1693, -0.7638, -1.2028, -0.8737, -1.8722, -0.8748, 1.7014, -1.2655, 0.7934, -0.7219, -1.7114, 0.1596, 0.6375, 2.7011, 0.5856, -2.037, 0.1569, 0.5823, -0.2766, 0.0518, -1.1607, -0.1148, -0.2509, -0.7391, 2.8307, 1.2479, -0.4836, -0.4469, -1.1029, 0.3802, -1.3266, -1.0309, -0.444, -0.7611, 1.6751, 0.734, 0.7083, -0.6021, 1.0543, 0.2855, -0.5823, -0.763, 0.5606, 1.1159, 0.1748, 0.4194, -0.6962, 2.4078, -0.3573, -0.7907, 0.634, -0.8799, 1.8415, -1.0986, -2.2364, 1.078, -2.1695, -1.8459, -0.9876, 0.1637, -0.5412, -0.1075, 1.8709, -0.4688, 0.9711, -1.7804, 0.489, -1.5025, 0.745, -0.8713, -0.2974, -0.8676, -1.671, 0.0625, 0.6515, 0.1996, 0.2482, 0.377, 0.9271, -0.079, 1.0397, -1.2689, 0.3849, 0.6133, 0.6993, 2.0175, -1.1697, -0.792, 1.6562, -0.05, -0.4165, 0.7876, 0.2012, -1.178, -0.8469, -0.3501, -0.8325, 1.9321, 1.1591, 0.5375, -1.8071, 0.9278, 0.1268, 1.2391, -0.1031, 0.574, 0.4001, -0.3221, 0.2517, 1.0654, 0.2248], -0.33735645039478665, 0.73620377028751548, 199),
];
