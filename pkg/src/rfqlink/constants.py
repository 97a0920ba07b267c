"""Physical constants (exact SI / CODATA 2018 values)."""

K_B = 1.380649e-23  # J/K
H = 6.62607015e-34  # J*s
Q_E = 1.602176634e-19  # C
T0 = 290.0  # K, standard noise reference temperature
