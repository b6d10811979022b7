#pragma once

// Planted data generators shared by the unit and acceptance tests.

#include <cmath>
#include <string>
#include <vector>

#include "greater/random.hpp"
#include "greater/table.hpp"

namespace planted {

using greater::ColumnSpec;
using greater::Modality;
using greater::Role;
using greater::Row;
using greater::Schema;
using greater::Table;

inline Schema categorical_schema(const std::vector<std::string>& payload, const std::string& subject = "subject_id") {
  Schema s{{subject, Modality::categorical, Role::subject_id}};
  for (const auto& p : payload) s.push_back({p, Modality::categorical, Role::payload});
  return s;
}

inline Table make(const std::vector<std::string>& payload, std::vector<Row> rows,
                  const std::string& subject = "subject_id") {
  return Table(categorical_schema(payload, subject), std::move(rows));
}

inline std::string subject_name(std::size_t i) { return "s" + std::to_string(i); }

struct ContextualCase {
  Table child;
  std::vector<std::string> contextual;
  std::vector<std::string> varying;
};

// Contextual columns are constant within every subject. Each varying column is
// constant for at most 70% of subjects and forced to vary for the rest.
inline ContextualCase contextual_case(std::uint64_t seed, std::size_t subjects = 40, std::size_t n_ctx = 3,
                                      std::size_t n_var = 3) {
  greater::Rng rng(seed);
  ContextualCase out;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n_ctx; ++i) out.contextual.push_back("ctx" + std::to_string(i));
  for (std::size_t i = 0; i < n_var; ++i) out.varying.push_back("var" + std::to_string(i));
  names = out.contextual;
  names.insert(names.end(), out.varying.begin(), out.varying.end());

  // per varying column: which subjects stay constant
  std::vector<std::vector<bool>> constant(n_var, std::vector<bool>(subjects, false));
  for (auto& col : constant) {
    const double share = 0.7 * rng.unit();
    std::vector<std::size_t> order(subjects);
    for (std::size_t i = 0; i < subjects; ++i) order[i] = i;
    rng.shuffle(order);
    const auto k = static_cast<std::size_t>(share * static_cast<double>(subjects));
    for (std::size_t i = 0; i < k; ++i) col[order[i]] = true;
  }

  std::vector<Row> rows;
  for (std::size_t s = 0; s < subjects; ++s) {
    const auto n_rows = 2 + rng.index(5);
    std::vector<std::string> ctx;
    for (std::size_t c = 0; c < n_ctx; ++c) ctx.push_back(std::to_string(rng.index(4)));
    std::vector<std::string> base;
    for (std::size_t c = 0; c < n_var; ++c) base.push_back(std::to_string(rng.index(4)));
    for (std::size_t r = 0; r < n_rows; ++r) {
      Row row{subject_name(s)};
      row.insert(row.end(), ctx.begin(), ctx.end());
      for (std::size_t c = 0; c < n_var; ++c) {
        if (constant[c][s]) {
          row.push_back(base[c]);
        } else if (r == 0) {
          row.push_back(base[c]);
        } else if (r == 1) {
          row.push_back(std::to_string((std::stoi(base[c]) + 1 + rng.index(3)) % 4));
        } else {
          row.push_back(std::to_string(rng.index(4)));
        }
      }
      rows.push_back(std::move(row));
    }
  }
  out.child = make(names, std::move(rows));
  return out;
}

// Two blocks of three columns each driven by a block latent, plus two columns
// independent of everything.
inline Table association_case(std::uint64_t seed, std::size_t n = 2000) {
  greater::Rng rng(seed);
  const std::vector<std::string> names{"a1", "a2", "a3", "b1", "b2", "b3", "ind1", "ind2"};
  std::vector<Row> rows;
  auto noisy = [&](std::uint64_t latent) {
    return std::to_string(rng.unit() < 0.75 ? latent : rng.index(4));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto za = rng.index(4), zb = rng.index(4);
    Row row{subject_name(i % 100)};
    for (int k = 0; k < 3; ++k) row.push_back(noisy(za));
    for (int k = 0; k < 3; ++k) row.push_back(noisy(zb));
    row.push_back(std::to_string(rng.index(4)));
    row.push_back(std::to_string(rng.index(4)));
    rows.push_back(std::move(row));
  }
  return make(names, std::move(rows));
}

struct TwoChild {
  Table a;
  Table b;
};

// Child a: gender (contextual), ad, click. Child b: city (contextual), item,
// noise. ad, click and item share a per-subject latent type; noise is
// independent of everything. One subject can be made to dominate row counts.
inline TwoChild two_child_case(std::uint64_t seed, std::size_t subjects = 30, std::size_t rows_a = 4,
                               std::size_t rows_b = 3, std::size_t engaged_extra = 0) {
  greater::Rng rng(seed);
  std::vector<Row> ra, rb;
  for (std::size_t s = 0; s < subjects; ++s) {
    const auto id = subject_name(s);
    const auto type = rng.index(3);
    const auto gender = std::to_string(1 + rng.index(2));
    const auto city = std::to_string(10 + rng.index(5));
    const auto na = 1 + rng.index(rows_a) + (s == 0 ? engaged_extra : 0);
    const auto nb = 1 + rng.index(rows_b) + (s == 0 ? engaged_extra : 0);
    for (std::size_t r = 0; r < na; ++r) {
      const auto ad = rng.unit() < 0.8 ? type : rng.index(3);
      const auto click = rng.unit() < 0.8 ? ad % 2 : rng.index(2);
      ra.push_back({id, gender, std::to_string(ad), std::to_string(click)});
    }
    for (std::size_t r = 0; r < nb; ++r) {
      const auto item = rng.unit() < 0.8 ? type : rng.index(3);
      rb.push_back({id, city, std::to_string(100 + item), std::to_string(rng.index(4))});
    }
  }
  return {make({"gender", "ad", "click"}, std::move(ra)), make({"city", "item", "noise"}, std::move(rb))};
}

struct EngagedCase {
  Table a;
  Table b;
  // Event-level truth: subject_id, ad, click, item, noise, gender, city.
  Table truth;
};

// Event-level generator where subject 0 holds `share` of all events. Each
// event draws ad/click (child a) and item/noise (child b); ad and item follow
// a per-subject latent type, which is the cross-table dependency.
inline EngagedCase engaged_case(std::uint64_t seed, std::size_t subjects = 40, double share = 0.6) {
  greater::Rng rng(seed);
  std::vector<std::size_t> events(subjects);
  std::size_t others = 0;
  for (std::size_t s = 1; s < subjects; ++s) others += events[s] = 1 + rng.index(6);
  events[0] = static_cast<std::size_t>(std::lround(share / (1.0 - share) * static_cast<double>(others)));

  std::vector<Row> ra, rb, rt;
  for (std::size_t s = 0; s < subjects; ++s) {
    const auto id = subject_name(s);
    const auto type = rng.index(3);
    const auto gender = std::to_string(1 + rng.index(2));
    const auto city = std::to_string(10 + rng.index(4));
    for (std::size_t e = 0; e < events[s]; ++e) {
      const auto ad = std::to_string(rng.unit() < 0.8 ? type : rng.index(3));
      const auto click = std::to_string(rng.unit() < 0.7 ? (ad == "0" ? 1 : 0) : rng.index(2));
      const auto item = std::to_string(100 + (rng.unit() < 0.8 ? type : rng.index(3)));
      const auto noise = std::to_string(rng.index(4));
      ra.push_back({id, gender, ad, click});
      rb.push_back({id, city, item, noise});
      rt.push_back({id, ad, click, item, noise, gender, city});
    }
  }
  return {make({"gender", "ad", "click"}, std::move(ra)), make({"city", "item", "noise"}, std::move(rb)),
          make({"ad", "click", "item", "noise", "gender", "city"}, std::move(rt))};
}

}  // namespace planted
