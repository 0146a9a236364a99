// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <iomanip>

#include "vecplan/errors.hpp"

namespace vecplan {

namespace {

constexpr std::array<RoomCategory, kCategoryCount> kCategories{RoomCategory::Living,   RoomCategory::Bedroom,
                                                               RoomCategory::Kitchen,  RoomCategory::Bathroom,
                                                               RoomCategory::Balcony,  RoomCategory::Storage};

int category_index(RoomCategory c) { return static_cast<int>(c) - 1; }

} // namespace

// Statistics.

PlanStatistics statistics_of(const VectorFloorPlan& plan) {
    PlanStatistics s;
    const int n = static_cast<int>(plan.rooms.size());
    s.room_count = n;
    int first_living = -1;
    double living_area = 0.0;
    for (int i = 0; i < n; ++i) {
        if (plan.rooms[static_cast<std::size_t>(i)].category != RoomCategory::Living) continue;
        s.living_count += 1.0;
        living_area += region_area(plan.rooms[static_cast<std::size_t>(i)].region);
        if (first_living < 0) first_living = i;
    }
    const double total = plan.boundary.area();
    s.living_area = total > 0.0 ? living_area / total : 0.0;
    if (first_living >= 0) {
        for (int j = 0; j < std::min(n, plan.adjacency.room_count); ++j) {
            if (j != first_living && first_living < plan.adjacency.room_count &&
                plan.adjacency.connected(first_living, j)) {
                s.living_connections += 1.0;
            }
        }
    }
    const double others = s.room_count - s.living_count;
    s.connection_ratio = others > 0.0 ? s.living_connections / others : 0.0;
    return s;
}

StatisticsReport plan_statistics(std::span<const VectorFloorPlan> generated, std::span<const VectorFloorPlan> reference) {
    if (generated.empty() || reference.empty()) {
        throw Error(ErrorCode::UndefinedRatio, "statistics need non-empty generated and reference sets");
    }
    auto mean = [](std::span<const VectorFloorPlan> set) {
        PlanStatistics m;
        for (const auto& p : set) {
            const auto s = statistics_of(p);
            m.room_count += s.room_count;
            m.living_connections += s.living_connections;
            m.connection_ratio += s.connection_ratio;
            m.living_count += s.living_count;
            m.living_area += s.living_area;
        }
        const double k = static_cast<double>(set.size());
        m.room_count /= k;
        m.living_connections /= k;
        m.connection_ratio /= k;
        m.living_count /= k;
        m.living_area /= k;
        return m;
    };
    const auto g = mean(generated);
    const auto r = mean(reference);
    auto ratio = [](double a, double b, const char* name) {
        if (b == 0.0) throw Error(ErrorCode::UndefinedRatio, std::string("reference mean of ") + name + " is zero");
        return a / b;
    };
    return {ratio(g.room_count, r.room_count, "R^n"), ratio(g.living_connections, r.living_connections, "C^l"),
            ratio(g.connection_ratio, r.connection_ratio, "C^r"), ratio(g.living_count, r.living_count, "L^n"),
            ratio(g.living_area, r.living_area, "L^a")};
}

// Compliance.

GeneratedAttributes attributes_of(const VectorFloorPlan& plan) {
    GeneratedAttributes a;
    a.nodes = plan.nodes();
    const auto perm = canonical_permutation(a.nodes);
    std::vector<RoomNode> sorted;
    for (int p : perm) sorted.push_back(a.nodes[static_cast<std::size_t>(p)]);
    AdjacencyMatrix adj;
    adj.room_count = plan.adjacency.room_count;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (std::size_t j = 0; j < perm.size(); ++j) {
            if (i != j && perm[i] < plan.adjacency.room_count && perm[j] < plan.adjacency.room_count &&
                plan.adjacency.connected(perm[i], perm[j])) {
                adj.entries[i][j] = 1;
            }
        }
    }
    a.nodes = std::move(sorted);
    a.adjacency = adj;
    return a;
}

GeneratedAttributes attributes_of(const StageTensor& raw_nodes) {
    GeneratedAttributes a;
    a.nodes = decode_nodes(raw_nodes);
    std::stable_sort(a.nodes.begin(), a.nodes.end(), canonical_less);
    return a;
}

ComplianceReport compliance_mae(std::span<const GeneratedAttributes> outputs, std::span<const Conditioning> conditions) {
    if (outputs.size() != conditions.size()) {
        throw Error(ErrorCode::ShapeMismatch, "each output needs exactly one conditioning");
    }
    ComplianceReport rep;
    rep.samples = outputs.size();
    double sn = 0, sc = 0, ssl = 0, sa = 0;
    std::size_t kn = 0, kc = 0, ksl = 0, ka = 0;
    for (std::size_t s = 0; s < outputs.size(); ++s) {
        const auto& out = outputs[s];
        const auto& c = conditions[s];
        if (c.room_count) {
            sn += std::abs(static_cast<double>(out.nodes.size()) - *c.room_count);
            ++kn;
        }
        if (c.categories) {
            std::array<int, kMaxRooms> a{}, b{};
            std::vector<int> ga, gb;
            for (const auto& n : out.nodes) ga.push_back(static_cast<int>(n.category));
            for (auto cat : *c.categories) gb.push_back(static_cast<int>(cat));
            std::sort(ga.begin(), ga.end());
            std::sort(gb.begin(), gb.end());
            for (std::size_t i = 0; i < kMaxRooms; ++i) {
                a[i] = i < ga.size() ? ga[i] : 0;
                b[i] = i < gb.size() ? gb[i] : 0;
            }
            double e = 0.0;
            for (std::size_t i = 0; i < kMaxRooms; ++i) e += std::abs(a[i] - b[i]);
            sc += e / kMaxRooms;
            ++kc;
        }
        if (c.sizes_locations) {
            double e = 0.0;
            for (std::size_t i = 0; i < kMaxRooms; ++i) {
                std::array<double, 3> g{}, r{};
                if (i < out.nodes.size()) g = {out.nodes[i].size, out.nodes[i].location.x, out.nodes[i].location.y};
                if (i < c.sizes_locations->size()) {
                    const auto& sl = (*c.sizes_locations)[i];
                    r = {sl.size, sl.x, sl.y};
                }
                for (int k = 0; k < 3; ++k) e += std::abs(g[static_cast<std::size_t>(k)] - r[static_cast<std::size_t>(k)]);
            }
            ssl += e / (kMaxRooms * 3);
            ++ksl;
        }
        if (c.adjacency) {
            const AdjacencyMatrix empty;
            const AdjacencyMatrix& g = out.adjacency ? *out.adjacency : empty;
            double e = 0.0;
            for (int i = 0; i < kMaxRooms; ++i) {
                for (int j = 0; j < kMaxRooms; ++j) {
                    e += std::abs(static_cast<int>(g.entries[i][j]) - static_cast<int>(c.adjacency->entries[i][j]));
                }
            }
            sa += e / (kMaxRooms * kMaxRooms);
            ++ka;
        }
    }
    if (kn) rep.room_count = sn / static_cast<double>(kn);
    if (kc) rep.categories = sc / static_cast<double>(kc);
    if (ksl) rep.sizes_locations = ssl / static_cast<double>(ksl);
    if (ka) rep.adjacency = sa / static_cast<double>(ka);
    return rep;
}

// Diversity and coverage.

Region category_region(const VectorFloorPlan& plan, RoomCategory category) {
    Region out;
    for (const auto& r : plan.rooms) {
        if (r.category == category) out = region_union(out, r.region);
    }
    return out;
}

CategoryScores diversity_avg(const std::vector<std::vector<VectorFloorPlan>>& variants) {
    CategoryScores total{};
    if (variants.empty()) {
        throw Error(ErrorCode::InvalidArgument, "diversity needs at least one sample");
    }
    for (const auto& set : variants) {
        if (set.size() < 2) {
            throw Error(ErrorCode::InvalidArgument, "diversity needs at least two variants per sample");
        }
        for (auto cat : kCategories) {
            std::vector<Region> regions;
            for (const auto& p : set) regions.push_back(category_region(p, cat));
            double sum = 0.0;
            int pairs = 0;
            for (std::size_t i = 0; i < regions.size(); ++i) {
                for (std::size_t j = i + 1; j < regions.size(); ++j) {
                    sum += rectilinear_iou(regions[i], regions[j]);
                    ++pairs;
                }
            }
            total[static_cast<std::size_t>(category_index(cat))] += sum / pairs;
        }
    }
    for (auto& v : total) v /= static_cast<double>(variants.size());
    return total;
}

CategoryScores coverage(std::span<const VectorFloorPlan> generated, std::span<const VectorFloorPlan> references) {
    if (generated.size() != references.size()) {
        throw Error(ErrorCode::ShapeMismatch, "coverage needs one reference per generated plan");
    }
    if (generated.empty()) {
        throw Error(ErrorCode::InvalidArgument, "coverage needs at least one pair");
    }
    CategoryScores total{};
    for (std::size_t s = 0; s < generated.size(); ++s) {
        for (auto cat : kCategories) {
            total[static_cast<std::size_t>(category_index(cat))] +=
                rectilinear_iou(category_region(generated[s], cat), category_region(references[s], cat));
        }
    }
    for (auto& v : total) v /= static_cast<double>(generated.size());
    return total;
}

std::size_t nearest_by_boundary(const VectorFloorPlan& plan, std::span<const VectorFloorPlan> pool) {
    if (pool.empty()) {
        throw Error(ErrorCode::InvalidArgument, "nearest-neighbour pool is empty");
    }
    const Region a = plan.boundary.interior();
    std::size_t best = 0;
    double best_iou = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double iou = rectilinear_iou(a, pool[i].boundary.interior());
        if (iou > best_iou) {
            best_iou = iou;
            best = i;
        }
    }
    return best;
}

// Frechet feature distance.

FeatureVector plan_features(const VectorFloorPlan& plan) {
    FeatureVector f{};
    f[0] = static_cast<double>(plan.rooms.size());
    const double total = plan.boundary.area();
    double aspect = 0.0;
    for (const auto& r : plan.rooms) {
        const auto k = static_cast<std::size_t>(category_index(r.category));
        f[1 + k] += 1.0;
        if (total > 0.0) f[7 + k] += region_area(r.region) / total;
        if (const auto b = region_bounds(r.region); b && !b->empty()) {
            aspect += std::max(b->width(), b->height()) / std::min(b->width(), b->height());
        }
    }
    for (std::size_t k = 7; k < 13; ++k) f[k] = std::clamp(f[k], 0.0, 1.0);
    f[13] = plan.adjacency.edge_count();
    f[14] = plan.rooms.empty() ? 0.0 : aspect / static_cast<double>(plan.rooms.size());
    return f;
}

namespace {

using Mat = Eigen::Matrix<double, kFeatureCount, kFeatureCount>;
using Vec = Eigen::Matrix<double, kFeatureCount, 1>;

void moments(std::span<const FeatureVector> xs, Vec& mu, Mat& cov) {
    mu.setZero();
    for (const auto& x : xs) mu += Eigen::Map<const Vec>(x.data());
    mu /= static_cast<double>(xs.size());
    cov.setZero();
    for (const auto& x : xs) {
        const Vec d = Eigen::Map<const Vec>(x.data()) - mu;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(xs.size() - 1);
}

// Eigenvalues below this fraction of the largest count as zero; rounding
// noise on a zero eigenvalue would otherwise survive the square root.
constexpr double kEigenFloor = 1e-12;

Vec clipped_eigenvalues(const Eigen::SelfAdjointEigenSolver<Mat>& es) {
    Vec ev = es.eigenvalues();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
    for (int i = 0; i < kFeatureCount; ++i) {
        if (ev(i) <= kEigenFloor * top) ev(i) = 0.0;
    }
    return ev;
}

} // namespace

double frechet_distance(std::span<const FeatureVector> a, std::span<const FeatureVector> b) {
    if (a.size() < kMinFrechetSamples || b.size() < kMinFrechetSamples) {
        throw Error(ErrorCode::TooFewSamples, "Frechet distance needs at least 16 plans per set");
    }
    Vec ma, mb;
    Mat ca, cb;
    moments(a, ma, ca);
    moments(b, mb, cb);
    // Tr((A B)^1/2) = Tr((A^1/2 B A^1/2)^1/2) for symmetric PSD A, B.
    const Eigen::SelfAdjointEigenSolver<Mat> ea(ca);
    const Mat sa = ea.eigenvectors() * clipped_eigenvalues(ea).cwiseSqrt().asDiagonal() * ea.eigenvectors().transpose();
    const Mat inner = sa * cb * sa;
    const Eigen::SelfAdjointEigenSolver<Mat> ei(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
    const double cross = clipped_eigenvalues(ei).cwiseSqrt().sum();
    const double d = (ma - mb).squaredNorm() + ca.trace() + cb.trace() - 2.0 * cross;
    return std::max(d, 0.0);
}

double frechet_feature_distance(std::span<const VectorFloorPlan> a, std::span<const VectorFloorPlan> b) {
    std::vector<FeatureVector> fa, fb;
    for (const auto& p : a) fa.push_back(plan_features(p));
    for (const auto& p : b) fb.push_back(plan_features(p));
    return frechet_distance(fa, fb);
}

// Reports.

Json statistics_to_json(const StatisticsReport& r) {
    return Json{{"R_n", r.room_count},
                {"C_l", r.living_connections},
                {"C_r", r.connection_ratio},
                {"L_n", r.living_count},
                {"L_a", r.living_area}};
}

Json compliance_to_json(const ComplianceReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    return Json{{"R_n", opt(r.room_count)},
                {"R_c", opt(r.categories)},
                {"R_sl", opt(r.sizes_locations)},
                {"R_a", opt(r.adjacency)},
                {"samples", r.samples}};
}

Json category_scores_to_json(const CategoryScores& s) {
    Json j = Json::object();
    for (auto cat : kCategories) j[std::string(category_name(cat))] = s[static_cast<std::size_t>(category_index(cat))];
    return j;
}

std::string format_statistics(const StatisticsReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << "R^n      C^l      C^r      L^n      L^a\n";
    os << std::setw(5) << r.room_count << "    " << std::setw(5) << r.living_connections << "    " << std::setw(5)
       << r.connection_ratio << "    " << std::setw(5) << r.living_count << "    " << std::setw(5) << r.living_area
       << "\n";
    return os.str();
}

std::string format_compliance(const ComplianceReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    auto cell = [&](const std::optional<double>& v) {
        if (v) os << std::setw(8) << *v;
        else os << std::setw(8) << "n/a";
    };
    os << "     R_n     R_c    R_sl     R_a\n";
    cell(r.room_count);
    cell(r.categories);
    cell(r.sizes_locations);
    cell(r.adjacency);
    os << "\nsamples: " << r.samples << "\n";
    return os.str();
}

std::string format_category_scores(const std::string& title, const CategoryScores& s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << title << "\n";
    for (auto cat : kCategories) os << std::setw(10) << category_name(cat);
    os << "\n";
    for (auto v : s) os << std::setw(10) << v;
    os << "\n";
    return os.str();
}

} // namespace vecplan
