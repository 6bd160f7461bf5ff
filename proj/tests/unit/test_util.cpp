#include <doctest.h>

#include "helpers.hpp"
#include "warden/util.hpp"

using namespace warden;
using namespace testing_support;

TEST_CASE("token estimate rounds up") {
  CHECK(estimate_tokens(0) == 0);
  CHECK(estimate_tokens(1) == 1);
  CHECK(estimate_tokens(4) == 1);
  CHECK(estimate_tokens(5) == 2);
  static_assert(estimate_tokens(4000) == 1000);
}

TEST_CASE("string helpers") {
  CHECK(trim("  a b \n") == "a b");
  CHECK(fold_name("Uniswap-V2") == fold_name("uniswap v2"));
  CHECK(icontains("Reentrancy Guard", "GUARD"));
  CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(short_hash("abc") == "ba7816bf8f01cfea");
}

TEST_CASE("json extraction from model replies") {
  CHECK(strip_code_fence("```json\n{\"a\": 1}\n```") == "{\"a\": 1}");
  CHECK(strip_code_fence("plain") == "plain");
  CHECK(extract_json("{\"a\": 1}")->at("a") == 1);
  CHECK(extract_json("Sure:\n```\n[1, 2]\n```\nDone.")->size() == 2);
  CHECK(extract_json("The answer is {\"x\": [1]} as asked.")->at("x").size() == 1);
  CHECK(extract_json("list [1] then {\"k\": 2}")->is_array());
  CHECK_FALSE(extract_json("nothing here"));
  CHECK_FALSE(extract_json("{broken"));
}

TEST_CASE("verdicts and string lists") {
  CHECK(parse_verdict(R"({"feasible": false})", {"feasible"}) == false);
  CHECK(parse_verdict(R"({"vulnerable": "Yes"})", {"feasible", "vulnerable"}) == true);
  CHECK(parse_verdict("Yes, it is reachable.", {"x"}) == true);
  CHECK(parse_verdict("- no", {"x"}) == false);
  CHECK_FALSE(parse_verdict("perhaps", {"x"}));
  CHECK(parse_string_list(R"({"tags": ["lending", " oracle "]})", {"tags"}) ==
        std::vector<std::string>{"lending", "oracle"});
  CHECK(parse_string_list(R"(["a", 3, "b"])", {}) == std::vector<std::string>{"a", "b"});
  CHECK(parse_string_list(R"({"other": ["a"]})", {"tags"}).empty());
  CHECK(parse_string_list("a, b\nc", {}) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("atomic writes replace the whole file") {
  auto path = (temp_dir("util") / "f.txt").string();
  write_file_atomically(path, "first version, rather long");
  write_file_atomically(path, "second");
  CHECK(read_file(path) == "second");
  CHECK(std::distance(std::filesystem::directory_iterator(std::filesystem::path(path).parent_path()),
                      std::filesystem::directory_iterator{}) == 1);
  CHECK_THROWS(read_file("/nonexistent/file"));
}
