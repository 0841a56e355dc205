// Golden-file regression test: a fixed-seed switched-cascade run written as
// CSV and compared byte-for-byte against the checked-in reference.
//
//   golden_main <golden.csv>            compare against the reference
//   golden_main <golden.csv> --regen    rewrite the reference
//
// The run exercises the full pipeline deterministically: certificate
// construction, dwell-time signal generation, simulation with scheduled
// switches, and the rescaled certificate along the trace.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "swc/adt.hpp"
#include "swc/cascade.hpp"
#include "swc/check.hpp"
#include "swc/config.hpp"
#include "swc/hybrid.hpp"
#include "swc/linear.hpp"

namespace {

std::string run_and_render() {
  // Two scalar cascade modes with moderate cross-mode form ratio.
  swc::LinearCascadeMode m1, m2;
  m1.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  m1.B = Eigen::MatrixXd::Constant(1, 1, 0.1);
  m1.F = Eigen::MatrixXd::Constant(1, 1, -1.0);
  m1.G = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m2.A = Eigen::MatrixXd::Constant(1, 1, -2.0);
  m2.B = Eigen::MatrixXd::Constant(1, 1, 0.2);
  m2.F = Eigen::MatrixXd::Constant(1, 1, -1.5);
  m2.G = Eigen::MatrixXd::Constant(1, 1, 1.0);
  std::vector<swc::LinearCascadeMode> modes{m1, m2};

  std::vector<swc::SubsystemCertificate> subs;
  std::vector<swc::ComparisonFunction> alphas;
  double c0 = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < modes.size(); ++p) {
    swc::QuadraticCertificate qc = swc::quad_cert_rates(
        modes[p], Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
    subs.push_back(swc::to_subsystem_certificate(qc, static_cast<int>(p)));
    double rate = std::min(qc.a_c, 0.75 * qc.a_o);
    alphas.push_back(swc::ComparisonFunction::linear(rate));
    c0 = std::min(c0, rate);
  }
  swc::CascadeCertificate cc =
      swc::build_cascade_certificate(subs, swc::JumpBounds::identity_jumps());
  swc::PsiFunction psi = swc::build_psi(alphas, c0);

  swc::ADTParams adt{2.0, 2.0};
  double zs0 = swc::compute_zeta_star(cc.chi, psi, 0.0).value;
  double zse = swc::compute_zeta_star(cc.chi, psi, 0.1).value;
  double zeta = 0.5 * (zse + adt.tau_a);
  swc::WFunction W = swc::make_cascade_W(cc, psi, zeta, zs0, adt, 1, 1);

  const double T = 6.0;
  swc::SwitchSignal sig = swc::generate_adt_signal(adt, {0, 1}, T, 42, 0);
  swc::HybridSystemDef sys = swc::make_switched_cascade(modes, adt);
  sys.switch_schedule = sig.switches;

  Eigen::VectorXd x0(1), e0(1);
  x0 << 1.0;
  e0 << 0.5;
  swc::SimConfig sc;
  sc.dt_base = 1e-3;
  sc.T_max = T;
  sc.seed = 42;
  sc.segment_stride = 8;
  swc::HybridArc arc =
      swc::simulate(sys, swc::cascade_initial_state(x0, e0, adt.N0), 0, sc);

  std::ostringstream out;
  out << "t,j,mode,x1,e1,tau,V,W\n";
  char buf[40];
  auto put = [&out, &buf](double v, bool last) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << (last ? '\n' : ',');
  };
  for (const auto& seg : arc.segments) {
    const auto& mc = cc.mode(seg.mode);
    for (std::size_t k = 0; k < seg.t.size(); ++k) {
      const Eigen::VectorXd& st = seg.x[k];
      put(seg.t[k], false);
      put(double(seg.j), false);
      put(double(seg.mode), false);
      put(st(0), false);
      put(st(1), false);
      put(st(2), false);
      put(mc.V(st.segment(0, 1), st.segment(1, 1)), false);
      put(W.eval(st, seg.mode), true);
    }
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: golden_main <golden.csv> [--regen]\n");
    return 2;
  }
  const std::string golden_path = argv[1];
  const bool regen = argc > 2 && std::string(argv[2]) == "--regen";

  std::string actual;
  try {
    actual = run_and_render();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "golden run failed: %s\n", e.what());
    return 1;
  }

  if (regen) {
    std::ofstream out(golden_path, std::ios::binary);
    out << actual;
    std::printf("wrote %s (%zu bytes)\n", golden_path.c_str(), actual.size());
    return 0;
  }

  std::ifstream in(golden_path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "cannot open golden file %s (run with --regen to create)\n",
                 golden_path.c_str());
    return 1;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string expected = buf.str();

  if (actual == expected) {
    std::printf("golden trace matches (%zu bytes)\n", actual.size());
    return 0;
  }

  // Locate the first differing line for the report.
  std::istringstream sa(actual), se(expected);
  std::string la, le;
  long line = 0;
  while (true) {
    ++line;
    bool ga = static_cast<bool>(std::getline(sa, la));
    bool ge = static_cast<bool>(std::getline(se, le));
    if (!ga && !ge) break;
    if (la != le || ga != ge) {
      std::fprintf(stderr, "golden trace differs at line %ld\n  expected: %s\n  actual:   %s\n",
                   line, ge ? le.c_str() : "<eof>", ga ? la.c_str() : "<eof>");
      return 1;
    }
  }
  std::fprintf(stderr, "golden trace differs (same lines, different bytes)\n");
  return 1;
}
