"""Physical constants and default material parameters (SI units throughout)."""

C = 299_792_458.0  # speed of light, m/s
PPM = 1e-6

N_DIAMOND = 2.41
N_AIR = 1.0
N_TA2O5 = 2.14
N_SIO2 = 1.48

LAMBDA_ZPL = 637e-9  # NV zero-phonon line, m
NU_ZPL = C / LAMBDA_ZPL

BETA0_NV = 0.03
