#include "fmea/config.hpp"

#include <cstdlib>
#include <sstream>

#include "fmea/error.hpp"
#include "fmea/util.hpp"

namespace fmea {

void RunConfig::apply_file_text(const std::string& content) {
  int line_number = 0;
  for (const std::string& raw : util::split(content, '\n')) {
    ++line_number;
    std::string line = util::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::UsageError, "config line " +
                                        std::to_string(line_number) +
                                        ": expected key = value");
    }
    std::string key = util::trim(line.substr(0, eq));
    std::string value = util::trim(line.substr(eq + 1));
    auto as_int = [&] { return std::stoi(value); };
    auto as_double = [&] { return std::stod(value); };
    if (key == "epochs") train.epochs = as_int();
    else if (key == "learning_rate") train.learning_rate = as_double();
    else if (key == "negative_ratio") train.negative_ratio = as_int();
    else if (key == "split_train") train.split_train = as_double();
    else if (key == "split_val") train.split_val = as_double();
    else if (key == "split_test") train.split_test = as_double();
    else if (key == "alpha") train.alpha = as_double();
    else if (key == "beta") train.beta = as_double();
    else if (key == "lambda") train.lambda = as_double();
    else if (key == "k_overlap") train.k_overlap = as_int();
    else if (key == "weight_decay") train.weight_decay = as_double();
    else if (key == "text_dim") train.text_dim = as_int();
    else if (key == "type_dim") train.type_dim = as_int();
    else if (key == "hidden_dim") train.hidden_dim = as_int();
    else if (key == "eval_every") train.eval_every = as_int();
    else if (key == "adam_beta1") train.adam_beta1 = as_double();
    else if (key == "adam_beta2") train.adam_beta2 = as_double();
    else if (key == "adam_eps") train.adam_eps = as_double();
    else if (key == "seed") train.seed = std::stoull(value);
    else if (key == "shortlist_k") shortlist_k = as_int();
    else if (key == "llm") llm_backend = value;
    else if (key == "llm_model") llm_model = value;
    else if (key == "embeddings") embeddings = value;
    else if (key == "embed_model") embed_model = value;
    else if (key == "embed_dim") embed_dim = as_int();
    else if (key == "llm_base_url") llm_base_url = value;
    else if (key == "llm_api_key") llm_api_key = value;
    else if (key == "transcripts") transcripts = value;
    else {
      throw Error(Errc::UsageError, "unknown config key '" + key + "'");
    }
  }
}

void RunConfig::apply_file(const std::string& path) {
  apply_file_text(util::read_file(path));
}

void RunConfig::apply_env() {
  if (const char* url = std::getenv("FMEA_LLM_BASE_URL")) llm_base_url = url;
  if (const char* key = std::getenv("FMEA_LLM_API_KEY")) llm_api_key = key;
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  out << "epochs = " << train.epochs << '\n';
  out << "learning_rate = " << train.learning_rate << '\n';
  out << "negative_ratio = " << train.negative_ratio << '\n';
  out << "split_train = " << train.split_train << '\n';
  out << "split_val = " << train.split_val << '\n';
  out << "split_test = " << train.split_test << '\n';
  out << "alpha = " << train.alpha << '\n';
  out << "beta = " << train.beta << '\n';
  out << "lambda = " << train.lambda << '\n';
  out << "k_overlap = " << train.k_overlap << '\n';
  out << "seed = " << train.seed << '\n';
  out << "weight_decay = " << train.weight_decay << '\n';
  out << "text_dim = " << train.text_dim << '\n';
  out << "type_dim = " << train.type_dim << '\n';
  out << "hidden_dim = " << train.hidden_dim << '\n';
  out << "eval_every = " << train.eval_every << '\n';
  out << "adam_beta1 = " << train.adam_beta1 << '\n';
  out << "adam_beta2 = " << train.adam_beta2 << '\n';
  out << "adam_eps = " << train.adam_eps << '\n';
  out << "shortlist_k = " << shortlist_k << '\n';
  out << "llm = " << llm_backend << '\n';
  out << "llm_model = " << llm_model << '\n';
  out << "embeddings = " << embeddings << '\n';
  out << "embed_model = " << embed_model << '\n';
  out << "embed_dim = " << embed_dim << '\n';
  out << "llm_base_url = " << llm_base_url << '\n';
  out << "llm_api_key = " << (llm_api_key.empty() ? "" : "<set>") << '\n';
  out << "transcripts = " << transcripts << '\n';
  return out.str();
}

}  // namespace fmea
