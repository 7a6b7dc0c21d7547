#pragma once

#include "phipd/image.hpp"

#include <utility>

// Unitary 2D DFT and phase/magnitude algebra.
//
// Both directions scale by 1/sqrt(H*W), so white noise of unit variance has
// unit-variance Fourier coefficients and Parseval holds without constants.
// Fields are stored in DFT index order; bin (u, v) mirrors to
// ((H - u) mod H, (W - v) mod W).

namespace phipd::spectral {

/// Relative bound on the imaginary residue ifft2 tolerates before it reports
/// a broken Hermitian symmetry.
inline constexpr double kSymmetryTolerance = 1e-10;

ComplexField fft2(const ImageGrid& img);

/// Real part of the inverse transform. Throws SymmetryViolation when the
/// imaginary residue exceeds kSymmetryTolerance times the real part's max-abs.
ImageGrid ifft2(const ComplexField& field);

/// Inverse transform without the real-ness check.
ComplexField ifft2_complex(const ComplexField& field);

/// (|F|, arg F) with arg in (-pi, pi]; zero bins get phase 0.
std::pair<MagnitudeField, PhaseField> decompose(const ComplexField& field);
MagnitudeField magnitude(const ComplexField& field);
PhaseField phase(const ComplexField& field);

/// A * exp(j phi). Rejects shape mismatch and negative magnitudes.
ComplexField compose(const MagnitudeField& mag, const PhaseField& phase);

/// Projects a candidate (magnitude, phase) pair onto the Hermitian set:
/// mirror-bin magnitudes are averaged, the canonical half-plane's phase is
/// kept and negated onto its mirror, and self-conjugate bins are snapped to
/// phase 0 or pi. Idempotent bitwise.
std::pair<MagnitudeField, PhaseField> hermitian_project(MagnitudeField mag, PhaseField phase);

std::size_t mirror_index(std::size_t u, std::size_t v, std::size_t height, std::size_t width);
bool is_self_conjugate(std::size_t u, std::size_t v, std::size_t height, std::size_t width);
/// True when the flat index is the lower of itself and its mirror (self-conjugate bins included).
bool is_canonical(std::size_t u, std::size_t v, std::size_t height, std::size_t width);

/// Max-abs of F(k) - conj(F(mirror k)).
double hermitian_residual(const ComplexField& field);

/// Wraps an angle into (-pi, pi].
double wrap_phase(double angle);
/// |wrap(a - b)|.
double circular_distance(double a, double b);

/// Structure of `phase_source`, spectrum magnitude of `magnitude_source`.
ImageGrid phase_mix(const ImageGrid& phase_source, const ImageGrid& magnitude_source);

}  // namespace phipd::spectral
