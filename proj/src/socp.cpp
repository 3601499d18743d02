#include "flame/socp.hpp"

#include "flame/loss.hpp"
#include "flame/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

namespace flame::socp {

namespace {

constexpr double kStepScale = 0.98;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Beyond this KKT size the sample-local blocks are factored separately and
// the cross-sample coupling handled as a low-rank update.
constexpr Eigen::Index kDenseKktLimit = 900;

struct Layout {
    Eigen::Index n = 0;       // samples
    Eigen::Index r = 0;       // reduced feature dimension
    Eigen::Index ncone = 0;   // cone variables
    Eigen::Index m = 0;       // equality constraints
    double degree = 0.0;      // total cone degree for the barrier parameter

    Eigen::Index s3_offset(Eigen::Index i) const { return r + 1 + 3 * i; }
    Eigen::Index xi(Eigen::Index i) const { return r + 1 + 3 * n + i; }
    Eigen::Index eta(Eigen::Index i) const { return r + 1 + 4 * n + i; }
    Eigen::Index phi(Eigen::Index i) const { return r + 1 + 5 * n + i; }

    Eigen::Index margin_row(Eigen::Index i) const { return i; }
    Eigen::Index loss_row(Eigen::Index i) const { return n + i; }
    Eigen::Index tau_row(Eigen::Index i) const { return 2 * n + i; }
    Eigen::Index w_row() const { return 3 * n; }
};

Layout make_layout(const Problem& problem) {
    Layout layout;
    layout.n = problem.sample_count();
    layout.r = problem.reduced_dim();
    layout.ncone = (layout.r + 1) + 6 * layout.n;
    layout.m = 3 * layout.n + 1;
    layout.degree = static_cast<double>(3 * layout.n) + static_cast<double>(layout.n + 1);
    return layout;
}

// ---------------------------------------------------------------------------
// Second-order cone algebra. J = diag(1, -I). For interior points u,
// jnrm(u) = sqrt(u0^2 - |u1|^2) is the geometric mean of the two Jordan
// eigenvalues u0 +- |u1|.

double soc_jnrm_squared(const Eigen::Ref<const Eigen::VectorXd>& u) {
    return u[0] * u[0] - u.tail(u.size() - 1).squaredNorm();
}

struct SocScaling {
    double eta = 1.0;          // jnrm(s) / jnrm(x)
    Eigen::VectorXd wbar;      // scaling point, jnrm 1;  H = eta (2 wbar wbar' - J)
    Eigen::VectorXd wtilde;    // J wbar;  H^{-1} = (1/eta)(2 wtilde wtilde' - J)
    Eigen::VectorXd v;         // W = sqrt(eta)(2 v v' - J) with v'Jv = 1

    static SocScaling identity(Eigen::Index dim) {
        SocScaling s;
        s.eta = 1.0;
        s.wbar = Eigen::VectorXd::Zero(dim);
        s.wbar[0] = 1.0;
        s.wtilde = s.wbar;
        s.v = s.wbar;
        return s;
    }

    static SocScaling compute(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& s) {
        SocScaling out;
        const double jx = std::sqrt(std::max(soc_jnrm_squared(x), 0.0));
        const double js = std::sqrt(std::max(soc_jnrm_squared(s), 0.0));
        out.eta = js / jx;
        const Eigen::VectorXd xbar = x / jx;
        const Eigen::VectorXd sbar = s / js;
        const double gamma = std::sqrt(0.5 * (1.0 + xbar.dot(sbar)));
        // wbar = (sbar + J xbar) / (2 gamma) maps the primal point onto the
        // dual one through H.
        out.wbar = sbar;
        out.wbar[0] += xbar[0];
        out.wbar.tail(x.size() - 1) -= xbar.tail(x.size() - 1);
        out.wbar /= 2.0 * gamma;
        out.wtilde = out.wbar;
        out.wtilde.tail(x.size() - 1) *= -1.0;
        out.v = out.wbar;
        out.v[0] += 1.0;
        out.v /= std::sqrt(2.0 * (out.wbar[0] + 1.0));
        return out;
    }

    // Each operator has the form 2 q q' - J with J = diag(1, -I); applying
    // -J to u flips the sign of the leading component only.
    Eigen::VectorXd apply_W(const Eigen::Ref<const Eigen::VectorXd>& u) const {
        Eigen::VectorXd out = u;
        out[0] = -u[0];
        out += 2.0 * v.dot(u) * v;
        out *= std::sqrt(eta);
        return out;
    }

    Eigen::VectorXd apply_Winv(const Eigen::Ref<const Eigen::VectorXd>& u) const {
        // W^{-1} = (1/sqrt(eta)) (2 (Jv)(Jv)' - J)
        Eigen::VectorXd jv = -v;
        jv[0] = v[0];
        Eigen::VectorXd out = u;
        out[0] = -u[0];
        out += 2.0 * jv.dot(u) * jv;
        out /= std::sqrt(eta);
        return out;
    }

    Eigen::VectorXd apply_H(const Eigen::Ref<const Eigen::VectorXd>& u) const {
        Eigen::VectorXd out = u;
        out[0] = -u[0];
        out += 2.0 * wbar.dot(u) * wbar;
        out *= eta;
        return out;
    }

    Eigen::VectorXd apply_Hinv(const Eigen::Ref<const Eigen::VectorXd>& u) const {
        Eigen::VectorXd out = u;
        out[0] = -u[0];
        out += 2.0 * wtilde.dot(u) * wtilde;
        out /= eta;
        return out;
    }
};

// Jordan product on a second-order cone block.
Eigen::VectorXd soc_product(const Eigen::Ref<const Eigen::VectorXd>& u,
                            const Eigen::Ref<const Eigen::VectorXd>& w) {
    Eigen::VectorXd out(u.size());
    out[0] = u.dot(w);
    out.tail(u.size() - 1) =
        u[0] * w.tail(w.size() - 1) + w[0] * u.tail(u.size() - 1);
    return out;
}

// Solves Arw(lambda) z = d.
Eigen::VectorXd soc_arrow_solve(const Eigen::Ref<const Eigen::VectorXd>& lambda,
                                const Eigen::Ref<const Eigen::VectorXd>& d) {
    const double det = soc_jnrm_squared(lambda);
    Eigen::VectorXd z(lambda.size());
    const double l0 = lambda[0];
    const auto l1 = lambda.tail(lambda.size() - 1);
    z[0] = (l0 * d[0] - l1.dot(d.tail(d.size() - 1))) / det;
    z.tail(z.size() - 1) = (d.tail(d.size() - 1) - z[0] * l1) / l0;
    return z;
}

// Largest alpha in [0, cap] with u + alpha du still in the cone.
double soc_step_bound(const Eigen::Ref<const Eigen::VectorXd>& u,
                      const Eigen::Ref<const Eigen::VectorXd>& du, double cap) {
    double bound = cap;
    if (du[0] < 0.0) {
        bound = std::min(bound, -u[0] / du[0]);
    }
    const double a = soc_jnrm_squared(du);
    const double b = 2.0 * (u[0] * du[0] - u.tail(u.size() - 1).dot(du.tail(du.size() - 1)));
    const double c = soc_jnrm_squared(u);
    // c > 0 at an interior point; find the first positive root of
    // a t^2 + b t + c = 0.
    double root = kInfinity;
    if (a < 0.0) {
        // Opens downward with f(0) > 0: the unique positive crossing.
        const double disc = b * b - 4.0 * a * c;
        root = (-b - std::sqrt(std::max(disc, 0.0))) / (2.0 * a);
        if (root < 0.0) root = kInfinity;
    } else if (a == 0.0) {
        if (b < 0.0) root = -c / b;
    } else if (b < 0.0) {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            root = (-b - std::sqrt(disc)) / (2.0 * a);
            if (root < 0.0) root = kInfinity;
        }
    }
    return std::min(bound, root);
}

// ---------------------------------------------------------------------------

struct Scalings {
    SocScaling dir;
    std::vector<SocScaling> s3;
    Eigen::VectorXd orth_x_over_s;  // H^{-1} diagonal on the orthant block
    Eigen::VectorXd orth_s_over_x;  // H diagonal
    Eigen::VectorXd lambda;         // scaled point, full cone layout
};

class Kkt;

struct Workspace {
    const Problem* problem = nullptr;
    Layout layout;
    Eigen::MatrixXd margin_rows;  // n x r, row i = y_i x_i'
    Eigen::MatrixXd gram;         // margin_rows * margin_rows', dense path only
    Eigen::VectorXd b;
    Eigen::VectorXd c;            // cone part only; the intercept has zero cost
    bool dense_path = true;

    Workspace(const Problem& p, SolvePath path) : problem(&p), layout(make_layout(p)) {
        const Eigen::Index n = layout.n;
        margin_rows = p.labels.asDiagonal() * p.features;
        dense_path = path == SolvePath::Auto ? (layout.m + 1) <= kDenseKktLimit
                                             : path == SolvePath::Dense;
        if (dense_path) {
            gram = margin_rows * margin_rows.transpose();
        }
        b = Eigen::VectorXd::Zero(layout.m);
        const double root_c = std::sqrt(p.C);
        for (Eigen::Index i = 0; i < n; ++i) {
            b[layout.loss_row(i)] = p.theta * root_c;
            b[layout.tau_row(i)] = 1.0;
        }
        b[layout.w_row()] = 1.0;
        c = Eigen::VectorXd::Zero(layout.ncone);
        for (Eigen::Index i = 0; i < n; ++i) c[layout.phi(i)] = 1.0;
    }

    Eigen::VectorXd cone_identity() const {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(layout.ncone);
        e[0] = 1.0;
        for (Eigen::Index i = 0; i < layout.n; ++i) {
            e[layout.s3_offset(i)] = 1.0;
            e[layout.xi(i)] = 1.0;
            e[layout.eta(i)] = 1.0;
            e[layout.phi(i)] = 1.0;
        }
        return e;
    }

    // A (beta; x_c)
    Eigen::VectorXd apply_A(double beta, const Eigen::VectorXd& xc) const {
        const Layout& L = layout;
        Eigen::VectorXd out(L.m);
        const Eigen::VectorXd projections = margin_rows * xc.segment(1, L.r);
        for (Eigen::Index i = 0; i < L.n; ++i) {
            const Eigen::Index s3 = L.s3_offset(i);
            out[L.margin_row(i)] = problem->labels[i] * beta + projections[i] -
                                   xc[s3] - xc[s3 + 1] + xc[L.xi(i)];
            out[L.loss_row(i)] = xc[s3] - xc[s3 + 1] + problem->C * xc[L.xi(i)] +
                                 xc[L.eta(i)] - xc[L.phi(i)];
            out[L.tau_row(i)] = xc[s3 + 2];
        }
        out[L.w_row()] = xc[0];
        return out;
    }

    // A' y, split into the intercept component and the cone block.
    void apply_At(const Eigen::VectorXd& y, double& out_beta, Eigen::VectorXd& out_cone) const {
        const Layout& L = layout;
        out_cone.setZero(L.ncone);
        double beta_acc = 0.0;
        for (Eigen::Index i = 0; i < L.n; ++i) beta_acc += problem->labels[i] * y[L.margin_row(i)];
        out_beta = beta_acc;
        out_cone[0] = y[L.w_row()];
        out_cone.segment(1, L.r) = margin_rows.transpose() * y.head(L.n);
        for (Eigen::Index i = 0; i < L.n; ++i) {
            const Eigen::Index s3 = L.s3_offset(i);
            const double ym = y[L.margin_row(i)];
            const double yl = y[L.loss_row(i)];
            out_cone[s3] = -ym + yl;
            out_cone[s3 + 1] = -ym - yl;
            out_cone[s3 + 2] = y[L.tau_row(i)];
            out_cone[L.xi(i)] = ym + problem->C * yl;
            out_cone[L.eta(i)] = yl;
            out_cone[L.phi(i)] = -yl;
        }
    }

    Scalings identity_scalings() const {
        Scalings s;
        s.dir = SocScaling::identity(layout.r + 1);
        s.s3.assign(static_cast<std::size_t>(layout.n), SocScaling::identity(3));
        s.orth_x_over_s = Eigen::VectorXd::Ones(3 * layout.n);
        s.orth_s_over_x = Eigen::VectorXd::Ones(3 * layout.n);
        s.lambda = cone_identity();
        return s;
    }

    Scalings compute_scalings(const Eigen::VectorXd& xc, const Eigen::VectorXd& sc) const {
        const Layout& L = layout;
        Scalings out;
        out.dir = SocScaling::compute(xc.head(L.r + 1), sc.head(L.r + 1));
        out.s3.reserve(static_cast<std::size_t>(L.n));
        for (Eigen::Index i = 0; i < L.n; ++i) {
            out.s3.push_back(
                SocScaling::compute(xc.segment(L.s3_offset(i), 3), sc.segment(L.s3_offset(i), 3)));
        }
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        out.orth_x_over_s = xc.segment(base, 3 * L.n).cwiseQuotient(sc.segment(base, 3 * L.n));
        out.orth_s_over_x = sc.segment(base, 3 * L.n).cwiseQuotient(xc.segment(base, 3 * L.n));
        out.lambda.resize(L.ncone);
        out.lambda.head(L.r + 1) = out.dir.apply_W(xc.head(L.r + 1));
        for (Eigen::Index i = 0; i < L.n; ++i) {
            out.lambda.segment(L.s3_offset(i), 3) =
                out.s3[static_cast<std::size_t>(i)].apply_W(xc.segment(L.s3_offset(i), 3));
        }
        out.lambda.segment(base, 3 * L.n) =
            (xc.segment(base, 3 * L.n).cwiseProduct(sc.segment(base, 3 * L.n))).cwiseSqrt();
        return out;
    }

    Eigen::VectorXd apply_W_full(const Scalings& s, const Eigen::VectorXd& u) const {
        const Layout& L = layout;
        Eigen::VectorXd out(L.ncone);
        out.head(L.r + 1) = s.dir.apply_W(u.head(L.r + 1));
        for (Eigen::Index i = 0; i < L.n; ++i)
            out.segment(L.s3_offset(i), 3) =
                s.s3[static_cast<std::size_t>(i)].apply_W(u.segment(L.s3_offset(i), 3));
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        out.segment(base, 3 * L.n) =
            s.orth_s_over_x.cwiseSqrt().cwiseProduct(u.segment(base, 3 * L.n));
        return out;
    }

    Eigen::VectorXd apply_Winv_full(const Scalings& s, const Eigen::VectorXd& u) const {
        const Layout& L = layout;
        Eigen::VectorXd out(L.ncone);
        out.head(L.r + 1) = s.dir.apply_Winv(u.head(L.r + 1));
        for (Eigen::Index i = 0; i < L.n; ++i)
            out.segment(L.s3_offset(i), 3) =
                s.s3[static_cast<std::size_t>(i)].apply_Winv(u.segment(L.s3_offset(i), 3));
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        out.segment(base, 3 * L.n) =
            s.orth_x_over_s.cwiseSqrt().cwiseProduct(u.segment(base, 3 * L.n));
        return out;
    }

    Eigen::VectorXd apply_H_full(const Scalings& s, const Eigen::VectorXd& u) const {
        const Layout& L = layout;
        Eigen::VectorXd out(L.ncone);
        out.head(L.r + 1) = s.dir.apply_H(u.head(L.r + 1));
        for (Eigen::Index i = 0; i < L.n; ++i)
            out.segment(L.s3_offset(i), 3) =
                s.s3[static_cast<std::size_t>(i)].apply_H(u.segment(L.s3_offset(i), 3));
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        out.segment(base, 3 * L.n) = s.orth_s_over_x.cwiseProduct(u.segment(base, 3 * L.n));
        return out;
    }

    Eigen::VectorXd apply_Hinv_full(const Scalings& s, const Eigen::VectorXd& u) const {
        const Layout& L = layout;
        Eigen::VectorXd out(L.ncone);
        out.head(L.r + 1) = s.dir.apply_Hinv(u.head(L.r + 1));
        for (Eigen::Index i = 0; i < L.n; ++i)
            out.segment(L.s3_offset(i), 3) =
                s.s3[static_cast<std::size_t>(i)].apply_Hinv(u.segment(L.s3_offset(i), 3));
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        out.segment(base, 3 * L.n) = s.orth_x_over_s.cwiseProduct(u.segment(base, 3 * L.n));
        return out;
    }

    // Jordan product of full cone vectors (orthant part elementwise).
    Eigen::VectorXd jordan_product(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const {
        const Layout& L = layout;
        Eigen::VectorXd out(L.ncone);
        out.head(L.r + 1) = soc_product(u.head(L.r + 1), w.head(L.r + 1));
        for (Eigen::Index i = 0; i < L.n; ++i)
            out.segment(L.s3_offset(i), 3) =
                soc_product(u.segment(L.s3_offset(i), 3), w.segment(L.s3_offset(i), 3));
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        out.segment(base, 3 * L.n) =
            u.segment(base, 3 * L.n).cwiseProduct(w.segment(base, 3 * L.n));
        return out;
    }

    Eigen::VectorXd arrow_solve_full(const Eigen::VectorXd& lambda,
                                     const Eigen::VectorXd& d) const {
        const Layout& L = layout;
        Eigen::VectorXd out(L.ncone);
        out.head(L.r + 1) = soc_arrow_solve(lambda.head(L.r + 1), d.head(L.r + 1));
        for (Eigen::Index i = 0; i < L.n; ++i)
            out.segment(L.s3_offset(i), 3) =
                soc_arrow_solve(lambda.segment(L.s3_offset(i), 3), d.segment(L.s3_offset(i), 3));
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        out.segment(base, 3 * L.n) =
            d.segment(base, 3 * L.n).cwiseQuotient(lambda.segment(base, 3 * L.n));
        return out;
    }

    double step_bound(const Eigen::VectorXd& u, const Eigen::VectorXd& du, double cap) const {
        const Layout& L = layout;
        double bound = soc_step_bound(u.head(L.r + 1), du.head(L.r + 1), cap);
        for (Eigen::Index i = 0; i < L.n; ++i) {
            bound = std::min(bound,
                             soc_step_bound(u.segment(L.s3_offset(i), 3),
                                            du.segment(L.s3_offset(i), 3), cap));
        }
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        for (Eigen::Index k = base; k < L.ncone; ++k) {
            if (du[k] < 0.0) bound = std::min(bound, -u[k] / du[k]);
        }
        return bound;
    }

    // Worst cone violation of a full vector: max over blocks of -lambda_min.
    double cone_violation(const Eigen::VectorXd& u) const {
        const Layout& L = layout;
        auto soc_violation = [](const Eigen::Ref<const Eigen::VectorXd>& blk) {
            return blk.tail(blk.size() - 1).norm() - blk[0];
        };
        double violation = soc_violation(u.head(L.r + 1));
        for (Eigen::Index i = 0; i < L.n; ++i) {
            violation = std::max(violation, soc_violation(u.segment(L.s3_offset(i), 3)));
        }
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        for (Eigen::Index k = base; k < L.ncone; ++k) violation = std::max(violation, -u[k]);
        return violation;
    }
};

// ---------------------------------------------------------------------------
// KKT solve:   H dx_c - A_c' dy = p_c,   -A_f' dy = p_f,
//              A_c dx_c + A_f dx_f = q.
// Eliminating dx_c yields the bordered system
//   [ G     a_f ] [ dy   ]   [ q - A_c H^{-1} p_c ]
//   [ a_f'   0  ] [ dx_f ] = [ -p_f ]
// with G = A_c H^{-1} A_c'. The cross-sample part of G is the direction
// cone's contribution: a rank-one term plus the fixed feature Gram matrix.

class Kkt {
  public:
    Kkt(const Workspace& ws, const Scalings& s) : ws_(ws), s_(s) {
        const Layout& L = ws.layout;
        // Direction cone pieces shared by both paths.
        g_margin_ = ws.margin_rows * s.dir.wtilde.tail(L.r);
        g_w_ = s.dir.wtilde[0];
        if (ws.dense_path) {
            factor_dense();
        } else {
            factor_local();
        }
    }

    struct CoreSolution {
        Eigen::VectorXd dx_cone;
        double dx_beta = 0.0;
        Eigen::VectorXd dy;
    };

    CoreSolution solve(const Eigen::VectorXd& p_c, double p_f, const Eigen::VectorXd& q) const {
        CoreSolution sol = solve_once(p_c, p_f, q);
        // Iterative refinement against the exact operators; the low-rank
        // path in particular loses digits when the scalings become extreme.
        const double rhs_scale = std::sqrt(p_c.squaredNorm() + p_f * p_f + q.squaredNorm());
        double previous = kInfinity;
        for (int round = 0; round < 4; ++round) {
            const Eigen::VectorXd res_c =
                p_c - ws_.apply_H_full(s_, sol.dx_cone) + at_cone(sol.dy);
            const double res_f = p_f + at_beta(sol.dy);
            const Eigen::VectorXd res_q = q - ws_.apply_A(sol.dx_beta, sol.dx_cone);
            const double res_norm =
                std::sqrt(res_c.squaredNorm() + res_f * res_f + res_q.squaredNorm());
            if (res_norm <= 1e-14 * (1.0 + rhs_scale) || res_norm >= 0.5 * previous) break;
            previous = res_norm;
            CoreSolution fix = solve_once(res_c, res_f, res_q);
            sol.dx_cone += fix.dx_cone;
            sol.dx_beta += fix.dx_beta;
            sol.dy += fix.dy;
        }
        return sol;
    }

  private:
    CoreSolution solve_once(const Eigen::VectorXd& p_c, double p_f,
                            const Eigen::VectorXd& q) const {
        const Layout& L = ws_.layout;
        const Eigen::VectorXd hinv_p = ws_.apply_Hinv_full(s_, p_c);
        Eigen::VectorXd rhs(L.m + 1);
        rhs.head(L.m) = q - ws_.apply_A(0.0, hinv_p);
        rhs[L.m] = -p_f;

        Eigen::VectorXd yext;
        if (ws_.dense_path) {
            yext = dense_lu_.solve(rhs);
        } else {
            yext = woodbury_solve(rhs);
        }

        CoreSolution sol;
        sol.dy = yext.head(L.m);
        sol.dx_beta = yext[L.m];
        Eigen::VectorXd at_y(L.ncone);
        double at_b = 0.0;
        ws_.apply_At(sol.dy, at_b, at_y);
        sol.dx_cone = ws_.apply_Hinv_full(s_, p_c + at_y);
        return sol;
    }

    double at_beta(const Eigen::VectorXd& y) const {
        double out = 0.0;
        for (Eigen::Index i = 0; i < ws_.layout.n; ++i) {
            out += ws_.problem->labels[i] * y[ws_.layout.margin_row(i)];
        }
        return out;
    }

    Eigen::VectorXd at_cone(const Eigen::VectorXd& y) const {
        Eigen::VectorXd cone;
        double beta = 0.0;
        ws_.apply_At(y, beta, cone);
        return cone;
    }

    // 3x3 local block of G for sample i over rows (margin, loss, tau) plus
    // the orthant slack contributions.
    Eigen::Matrix3d local_block(Eigen::Index i) const {
        static const Eigen::Matrix3d kEje = [] {
            Eigen::Matrix3d eje;
            eje << 0, -2, 0, -2, 0, 0, 0, 0, -1;
            return eje;
        }();
        static const Eigen::Matrix3d kCols = [] {
            Eigen::Matrix3d e;
            e << -1, -1, 0, 1, -1, 0, 0, 0, 1;  // rows: margin, loss, tau
            return e;
        }();
        const SocScaling& sc = s_.s3[static_cast<std::size_t>(i)];
        const Eigen::Vector3d u = kCols * sc.wtilde;
        Eigen::Matrix3d block = (2.0 * u * u.transpose() - kEje) / sc.eta;
        const Layout& L = ws_.layout;
        const Eigen::Index base = L.r + 1 + 3 * L.n;
        const double C = ws_.problem->C;
        const double h_xi = s_.orth_x_over_s[L.xi(i) - base];
        const double h_eta = s_.orth_x_over_s[L.eta(i) - base];
        const double h_phi = s_.orth_x_over_s[L.phi(i) - base];
        block(0, 0) += h_xi;
        block(0, 1) += h_xi * C;
        block(1, 0) += h_xi * C;
        block(1, 1) += h_xi * C * C + h_eta + h_phi;
        return block;
    }

    void factor_dense() {
        const Layout& L = ws_.layout;
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(L.m + 1, L.m + 1);
        for (Eigen::Index i = 0; i < L.n; ++i) {
            const Eigen::Matrix3d block = local_block(i);
            const Eigen::Index rows[3] = {L.margin_row(i), L.loss_row(i), L.tau_row(i)};
            for (int a = 0; a < 3; ++a)
                for (int bcol = 0; bcol < 3; ++bcol) B(rows[a], rows[bcol]) += block(a, bcol);
        }
        const double inv_eta = 1.0 / s_.dir.eta;
        B.topLeftCorner(L.n, L.n) +=
            inv_eta * (2.0 * g_margin_ * g_margin_.transpose() + ws_.gram);
        B(L.w_row(), L.w_row()) += inv_eta * (2.0 * g_w_ * g_w_ - 1.0);
        B.col(L.w_row()).head(L.n) += (2.0 * inv_eta * g_w_) * g_margin_;
        B.row(L.w_row()).head(L.n) += (2.0 * inv_eta * g_w_) * g_margin_.transpose();
        for (Eigen::Index i = 0; i < L.n; ++i) {
            B(L.margin_row(i), L.m) = ws_.problem->labels[i];
            B(L.m, L.margin_row(i)) = ws_.problem->labels[i];
        }
        dense_lu_.compute(B);
    }

    void factor_local() {
        const Layout& L = ws_.layout;
        const Eigen::Index width = 1 + L.r + 1 + 2;
        local_inverse_.resize(static_cast<std::size_t>(L.n));
        for (Eigen::Index i = 0; i < L.n; ++i) {
            local_inverse_[static_cast<std::size_t>(i)] = local_block(i).inverse();
        }

        // Low-rank columns: the direction-cone rank-one vector, the feature
        // columns carrying the Gram coupling, the unit vector moving the
        // -1/eta part of the w row out of the shifted diagonal, then the
        // intercept border and its diagonal-shift compensation.
        U_.setZero(L.m + 1, width);
        U_.col(0).head(L.n) = g_margin_;
        U_(L.w_row(), 0) = g_w_;
        U_.block(0, 1, L.n, L.r) = ws_.margin_rows;
        U_(L.w_row(), 1 + L.r) = 1.0;
        for (Eigen::Index i = 0; i < L.n; ++i)
            U_(L.margin_row(i), 2 + L.r) = ws_.problem->labels[i];
        U_(L.m, 3 + L.r) = 1.0;

        Eigen::MatrixXd m_inv = Eigen::MatrixXd::Zero(width, width);
        m_inv(0, 0) = s_.dir.eta / 2.0;
        for (Eigen::Index j = 0; j < L.r; ++j) m_inv(1 + j, 1 + j) = s_.dir.eta;
        m_inv(1 + L.r, 1 + L.r) = 1.0 / (-1.0 / s_.dir.eta - kDiagShift);
        m_inv(2 + L.r, 2 + L.r) = kDiagShift;
        m_inv(2 + L.r, 3 + L.r) = 1.0;
        m_inv(3 + L.r, 2 + L.r) = 1.0;

        dinv_U_.resize(L.m + 1, width);
        for (Eigen::Index col = 0; col < width; ++col) {
            dinv_U_.col(col) = dtilde_solve(U_.col(col));
        }
        inner_lu_.compute(m_inv + U_.transpose() * dinv_U_);
    }

    // Applies the inverse of the block-diagonal part.
    Eigen::VectorXd dtilde_solve(const Eigen::VectorXd& rhs) const {
        const Layout& L = ws_.layout;
        Eigen::VectorXd out(L.m + 1);
        for (Eigen::Index i = 0; i < L.n; ++i) {
            Eigen::Vector3d v(rhs[L.margin_row(i)], rhs[L.loss_row(i)], rhs[L.tau_row(i)]);
            const Eigen::Vector3d w = local_inverse_[static_cast<std::size_t>(i)] * v;
            out[L.margin_row(i)] = w[0];
            out[L.loss_row(i)] = w[1];
            out[L.tau_row(i)] = w[2];
        }
        out[L.w_row()] = rhs[L.w_row()] / kDiagShift;
        out[L.m] = rhs[L.m] / kDiagShift;
        return out;
    }

    Eigen::VectorXd woodbury_solve(const Eigen::VectorXd& rhs) const {
        Eigen::VectorXd z = dtilde_solve(rhs);
        const Eigen::VectorXd h = inner_lu_.solve(U_.transpose() * z);
        z -= dinv_U_ * h;
        return z;
    }

    static constexpr double kDiagShift = 1.0;

    const Workspace& ws_;
    const Scalings& s_;
    Eigen::VectorXd g_margin_;
    double g_w_ = 1.0;

    Eigen::PartialPivLU<Eigen::MatrixXd> dense_lu_;

    std::vector<Eigen::Matrix3d> local_inverse_;
    double dw_inv_ = 1.0;
    Eigen::MatrixXd U_;
    Eigen::MatrixXd dinv_U_;
    Eigen::PartialPivLU<Eigen::MatrixXd> inner_lu_;
};

struct Iterate {
    Eigen::VectorXd xc;
    double beta = 0.0;
    Eigen::VectorXd y;
    Eigen::VectorXd sc;
    double tau = 1.0;
    double kappa = 1.0;
};

struct Residuals {
    Eigen::VectorXd rp;      // A x - b tau
    Eigen::VectorXd rd_cone; // -(A'y)_cone - s + c tau
    double rd_beta = 0.0;    // -(A'y)_beta
    double rg = 0.0;         // b'y - c'x - kappa
    double pres = 0.0;
    double dres = 0.0;
    double gap = 0.0;
    double pcost = 0.0;
};

Residuals compute_residuals(const Workspace& ws, const Iterate& it) {
    Residuals res;
    res.rp = ws.apply_A(it.beta, it.xc) - ws.b * it.tau;
    Eigen::VectorXd at_cone;
    double at_beta = 0.0;
    ws.apply_At(it.y, at_beta, at_cone);
    res.rd_cone = -at_cone - it.sc + ws.c * it.tau;
    res.rd_beta = -at_beta;
    const double pcost = ws.c.dot(it.xc);
    const double dcost = ws.b.dot(it.y);
    res.rg = dcost - pcost - it.kappa;
    res.pres = res.rp.norm() / it.tau / (1.0 + ws.b.norm());
    const double dres_norm =
        std::sqrt(res.rd_cone.squaredNorm() + res.rd_beta * res.rd_beta);
    res.dres = dres_norm / it.tau / (1.0 + ws.c.norm());
    const double pc = pcost / it.tau;
    const double dc = dcost / it.tau;
    res.gap = std::abs(pc - dc) / (1.0 + std::max(std::abs(pc), std::abs(dc)));
    res.pcost = pc;
    return res;
}

}  // namespace

Problem build_problem(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                      double C, double theta) {
    if (!std::isfinite(C) || C <= 0.0) {
        throw std::invalid_argument("socp: C must be positive");
    }
    if (!std::isfinite(theta) || theta < 0.0 || theta > 1.0) {
        throw std::invalid_argument("socp: theta must lie in [0, 1]");
    }
    Problem problem;
    problem.labels = labels;
    problem.C = C;
    problem.theta = theta;
    problem.original_dim = features.cols();
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (d > n) {
        // The optimal direction lies in the span of the samples; rotate onto
        // an orthonormal basis of that span.
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(features.transpose());
        const Eigen::Index rank = std::max<Eigen::Index>(qr.rank(), 1);
        problem.back_map =
            qr.householderQ() * Eigen::MatrixXd::Identity(d, rank);
        problem.features = features * problem.back_map;
    } else {
        problem.features = features;
    }
    return problem;
}

Solution solve(const Problem& problem, double tolerance, int max_iterations, SolvePath path) {
    Workspace ws(problem, path);
    const Layout& L = ws.layout;
    const Eigen::VectorXd e = ws.cone_identity();

    Iterate it;
    {
        Scalings ident = ws.identity_scalings();
        Kkt kkt(ws, ident);
        // Primal start: least-norm solution of the equalities, pushed into
        // the cone interior.
        auto primal = kkt.solve(Eigen::VectorXd::Zero(L.ncone), 0.0, ws.b);
        const double alpha_p = ws.cone_violation(primal.dx_cone);
        it.xc = primal.dx_cone;
        if (alpha_p >= 0.0) it.xc += (1.0 + alpha_p) * e;
        it.beta = primal.dx_beta;
        // Dual start from the least-squares dual slack.
        auto dual = kkt.solve(-ws.c, 0.0, Eigen::VectorXd::Zero(L.m));
        it.y = dual.dy;
        Eigen::VectorXd shat = -dual.dx_cone;
        const double alpha_d = ws.cone_violation(shat);
        it.sc = shat;
        if (alpha_d >= 0.0) it.sc += (1.0 + alpha_d) * e;
        it.tau = 1.0;
        it.kappa = 1.0;
    }

    const double mu_div = L.degree + 1.0;
    Solution best;
    double best_metric = kInfinity;
    int iterations_done = 0;
    bool converged = false;

    auto snapshot = [&](const Iterate& cur, const Residuals& res, int iters, bool ok) {
        Solution out;
        const double tau = cur.tau;
        Eigen::VectorXd omega_reduced = cur.xc.segment(1, L.r) / tau;
        if (problem.back_map.size() > 0) {
            out.omega = problem.back_map * omega_reduced;
        } else {
            out.omega = omega_reduced;
        }
        out.beta = cur.beta / tau;
        out.w = cur.xc[0] / tau;
        out.rho.resize(L.n);
        out.sigma.resize(L.n);
        out.tau_cone.resize(L.n);
        out.xi.resize(L.n);
        out.eta.resize(L.n);
        out.phi.resize(L.n);
        for (Eigen::Index i = 0; i < L.n; ++i) {
            out.rho[i] = cur.xc[L.s3_offset(i)] / tau;
            out.sigma[i] = cur.xc[L.s3_offset(i) + 1] / tau;
            out.tau_cone[i] = cur.xc[L.s3_offset(i) + 2] / tau;
            out.xi[i] = cur.xc[L.xi(i)] / tau;
            out.eta[i] = cur.xc[L.eta(i)] / tau;
            out.phi[i] = cur.xc[L.phi(i)] / tau;
        }
        out.dual_y = cur.y / tau;
        out.norm_ball_multiplier = cur.sc[0] / tau;
        out.objective = res.pcost;
        out.primal_residual = res.pres;
        out.dual_residual = res.dres;
        out.gap = res.gap;
        out.iterations = iters;
        out.converged = ok;
        return out;
    };

    for (int iter = 0; iter <= max_iterations; ++iter) {
        iterations_done = iter;
        Residuals res = compute_residuals(ws, it);
        const double metric = std::max({res.pres, res.dres, res.gap});
        if (metric < best_metric) {
            best_metric = metric;
            best = snapshot(it, res, iter, false);
        }
        if (res.pres <= tolerance && res.dres <= tolerance && res.gap <= tolerance) {
            converged = true;
            best = snapshot(it, res, iter, true);
            break;
        }
        if (it.tau < 1e-12) {
            throw SolverError("socp: embedding scale collapsed; problem deemed infeasible");
        }
        if (iter == max_iterations) break;

        const double mu = (it.xc.dot(it.sc) + it.tau * it.kappa) / mu_div;
        Scalings scal = ws.compute_scalings(it.xc, it.sc);
        Kkt kkt(ws, scal);

        // Direction attached to the d tau column.
        auto dir = kkt.solve(-ws.c, 0.0, ws.b);
        const double dir_term = ws.b.dot(dir.dy) - ws.c.dot(dir.dx_cone);

        auto newton = [&](const Eigen::VectorXd& d_comp, double d_tk, double eta_r) {
            const Eigen::VectorXd d_s = ws.arrow_solve_full(scal.lambda, d_comp);
            const Eigen::VectorXd w_ds = ws.apply_W_full(scal, d_s);
            const Eigen::VectorXd p_c = -eta_r * res.rd_cone + w_ds;
            const double p_f = -eta_r * res.rd_beta;
            const Eigen::VectorXd q = -eta_r * res.rp;
            auto base = kkt.solve(p_c, p_f, q);
            const double base_term = ws.b.dot(base.dy) - ws.c.dot(base.dx_cone);
            const double dtau =
                (-eta_r * res.rg + d_tk / it.tau - base_term) / (dir_term + it.kappa / it.tau);
            struct Step {
                Eigen::VectorXd dx;
                double dbeta;
                Eigen::VectorXd dy;
                Eigen::VectorXd ds;
                double dtau;
                double dkappa;
            } step;
            step.dx = base.dx_cone + dtau * dir.dx_cone;
            step.dbeta = base.dx_beta + dtau * dir.dx_beta;
            step.dy = base.dy + dtau * dir.dy;
            step.ds = w_ds - ws.apply_H_full(scal, step.dx);
            step.dtau = dtau;
            step.dkappa = (d_tk - it.kappa * dtau) / it.tau;
            return step;
        };

        auto step_length = [&](const auto& step) {
            double bound = ws.step_bound(it.xc, step.dx, kInfinity);
            bound = std::min(bound, ws.step_bound(it.sc, step.ds, kInfinity));
            if (step.dtau < 0.0) bound = std::min(bound, -it.tau / step.dtau);
            if (step.dkappa < 0.0) bound = std::min(bound, -it.kappa / step.dkappa);
            return bound;
        };

        // Affine (predictor) direction.
        const Eigen::VectorXd lam_sq = ws.jordan_product(scal.lambda, scal.lambda);
        auto affine = newton(-lam_sq, -it.tau * it.kappa, 1.0);
        const double alpha_aff = std::min(1.0, step_length(affine));

        double mu_aff = (it.xc + alpha_aff * affine.dx).dot(it.sc + alpha_aff * affine.ds);
        mu_aff += (it.tau + alpha_aff * affine.dtau) * (it.kappa + alpha_aff * affine.dkappa);
        mu_aff /= mu_div;
        double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
        sigma = std::clamp(sigma, 1e-8, 0.999);

        // Combined (corrector) direction.
        const Eigen::VectorXd corr = ws.jordan_product(ws.apply_W_full(scal, affine.dx),
                                                       ws.apply_Winv_full(scal, affine.ds));
        Eigen::VectorXd d_comp = -lam_sq + sigma * mu * e - corr;
        const double d_tk = -it.tau * it.kappa + sigma * mu - affine.dtau * affine.dkappa;
        auto combined = newton(d_comp, d_tk, 1.0 - sigma);

        double alpha = kStepScale * step_length(combined);
        alpha = std::min(alpha, 1.0);

        if (std::getenv("FLAME_SOCP_TRACE") != nullptr) {
            std::fprintf(stderr,
                         "iter=%3d pres=%.2e dres=%.2e gap=%.2e mu=%.2e a_aff=%.3f sigma=%.3f "
                         "alpha=%.3f tau=%.2e kappa=%.2e\n",
                         iter, res.pres, res.dres, res.gap, mu, alpha_aff, sigma, alpha, it.tau,
                         it.kappa);
        }

        it.xc += alpha * combined.dx;
        it.beta += alpha * combined.dbeta;
        it.y += alpha * combined.dy;
        it.sc += alpha * combined.ds;
        it.tau += alpha * combined.dtau;
        it.kappa += alpha * combined.dkappa;
    }

    best.iterations = iterations_done;
    best.converged = converged;
    return best;
}

}  // namespace flame::socp
