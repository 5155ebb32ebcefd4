#pragma once

#include <regex>
#include <string>

#include <json.hpp>

#include "ikbd/core/dictionary.hpp"
#include "ikbd/error.hpp"

namespace ikbd::dnd {

enum class Variant { dnd, bi_rnn, uni_rnn, gaussian_baseline };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::dnd: return "dnd";
    case Variant::bi_rnn: return "bi-rnn";
    case Variant::uni_rnn: return "uni-rnn";
    case Variant::gaussian_baseline: return "gaussian-baseline";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "dnd") return Variant::dnd;
  if (s == "bi-rnn") return Variant::bi_rnn;
  if (s == "uni-rnn") return Variant::uni_rnn;
  if (s == "gaussian-baseline" || s == "gaussian") return Variant::gaussian_baseline;
  throw ConfigError("unknown variant '" + s + "'");
}

/// How the language-model stack sees the intermediate prediction while
/// training. Inference always embeds the argmax symbol.
enum class ClmInput { soft, hard };

inline std::string to_string(ClmInput c) { return c == ClmInput::soft ? "soft" : "hard"; }
inline ClmInput parse_clm_input(const std::string& s) {
  if (s == "soft") return ClmInput::soft;
  if (s == "hard") return ClmInput::hard;
  throw ConfigError("unknown clm input mode '" + s + "'");
}

struct DndConfig {
  int dec_stacks = 2;
  int clm_stacks = 2;
  int units = 64;
  int embed_dim = 16;
  int dict_size = CharacterDictionary::kSize;
  int window = 64;
  double aux_loss_weight = 1.0;
  Variant variant = Variant::dnd;
  ClmInput clm_input = ClmInput::soft;

  bool uses_clm() const { return variant == Variant::dnd; }
  bool bidirectional() const { return variant != Variant::uni_rnn; }
  bool aux() const { return variant == Variant::dnd && aux_loss_weight > 0.0; }

  void validate() const {
    if (variant == Variant::gaussian_baseline) return;
    if (dec_stacks < 1 || units < 1 || embed_dim < 1 || window < 1) {
      throw ConfigError("model dimensions must be positive");
    }
    if (uses_clm() && clm_stacks < 1) throw ConfigError("clm_stacks must be positive");
    if (dict_size != CharacterDictionary::kSize) {
      throw ConfigError("dict_size must equal the dictionary size (31)");
    }
    if (!(aux_loss_weight >= 0.0)) throw ConfigError("aux_loss_weight must be >= 0");
  }

  /// Parameter tag in the "s2u64au" style: stacks, units, aux suffix.
  std::string tag() const {
    std::string t = "s" + std::to_string(dec_stacks) + "u" + std::to_string(units);
    if (aux()) t += "au";
    return t;
  }

  bool operator==(const DndConfig&) const = default;
};

/// Applies a "s<stacks>u<units>[au]" tag. Without "au" the aux weight is
/// zeroed; with it, a zero weight is reset to 1.
inline void apply_tag(DndConfig& cfg, const std::string& tag) {
  static const std::regex re(R"(s(\d+)u(\d+)(au)?)");
  std::smatch m;
  if (!std::regex_match(tag, m, re)) throw ConfigError("bad parameter tag '" + tag + "'");
  cfg.dec_stacks = std::stoi(m[1]);
  cfg.units = std::stoi(m[2]);
  if (m[3].matched) {
    if (cfg.aux_loss_weight == 0.0) cfg.aux_loss_weight = 1.0;
  } else {
    cfg.aux_loss_weight = 0.0;
  }
}

inline void to_json(nlohmann::json& j, const DndConfig& c) {
  j = {{"dec_stacks", c.dec_stacks}, {"clm_stacks", c.clm_stacks}, {"units", c.units},
       {"embed_dim", c.embed_dim},   {"dict_size", c.dict_size},   {"window", c.window},
       {"aux_loss_weight", c.aux_loss_weight}, {"variant", to_string(c.variant)},
       {"clm_input", to_string(c.clm_input)}};
}

inline void from_json(const nlohmann::json& j, DndConfig& c) {
  c.dec_stacks = j.at("dec_stacks").get<int>();
  c.clm_stacks = j.at("clm_stacks").get<int>();
  c.units = j.at("units").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.dict_size = j.at("dict_size").get<int>();
  c.window = j.at("window").get<int>();
  c.aux_loss_weight = j.at("aux_loss_weight").get<double>();
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.clm_input = parse_clm_input(j.value("clm_input", std::string("soft")));
}

}  // namespace ikbd::dnd
