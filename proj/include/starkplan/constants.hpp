#pragma once

namespace starkplan::constants {

// CODATA 2018 values, SI base units unless noted.
inline constexpr double k_boltzmann_j_per_k = 1.380649e-23;
inline constexpr double planck_j_s = 6.62607015e-34;
inline constexpr double elementary_charge_c = 1.602176634e-19;
inline constexpr double bohr_magneton_j_per_t = 9.274010078e-24;
inline constexpr double vacuum_permittivity_f_per_m = 8.854187813e-12;
inline constexpr double gas_constant_j_per_mol_k = 8.314462618;
inline constexpr double avogadro_per_mol = 6.02214076e23;

// mu_B / h, directly in GHz per tesla: the Zeeman conversion used throughout.
inline constexpr double bohr_magneton_ghz_per_t =
    bohr_magneton_j_per_t / planck_j_s * 1e-9;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double ln2 = 0.69314718055994530942;

// FWHM of a unit-sigma Gaussian: 2*sqrt(2*ln2).
inline constexpr double gaussian_fwhm_per_sigma = 2.35482004503094938;

}  // namespace starkplan::constants
