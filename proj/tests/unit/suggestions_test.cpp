#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "../support/test_util.hpp"
#include "xu/suggestions.hpp"

using namespace xu;
using testutil::TempFile;

TEST_CASE("normalize_rows lowercases, dedupes, and caps") {
    std::vector<std::pair<std::string, std::optional<double>>> rows = {
        {"Alpha", 10.0}, {"  beta ", std::nullopt}, {"alpha", 9.0}, {"", 8.0}, {"gamma", 7.0},
    };
    auto out = detail::normalize_rows(rows, 10);
    REQUIRE(out.size() == 3);
    CHECK(out[0].term == "alpha");
    CHECK(out[0].provider_rank == 0);
    CHECK(out[0].provider_score == 10.0);
    CHECK(out[1].term == "beta");
    CHECK(out[1].provider_rank == 1);
    CHECK_FALSE(out[1].provider_score.has_value());
    CHECK(out[2].term == "gamma");
    CHECK(out[2].provider_rank == 4);

    auto capped = detail::normalize_rows(rows, 2);
    REQUIRE(capped.size() == 2);
    CHECK(capped[1].term == "beta");
}

TEST_CASE("lexicon loads, normalizes, and serves ranked terms") {
    LocalLexicon lex = load_lexicon(testutil::fixture_path("lexicon.json"));
    REQUIRE(lex.entries.size() == 5);
    REQUIRE(lex.entries.count("storm") == 1);
    CHECK(lex.entries.at("storm").size() == 10);
    CHECK(lex.entries.at("oracle").size() == 4);
    CHECK(lex.entries.count("sea voyage") == 1);

    auto top3 = fetch_local(lex, "  STORM ", 3);
    REQUIRE(top3.size() == 3);
    CHECK(top3[0].term == "gale");
    CHECK(top3[0].provider_rank == 0);
    CHECK(top3[1].term == "squall");
    CHECK(top3[2].term == "tempest");
    CHECK(top3[2].provider_rank == 2);
    CHECK_FALSE(top3[0].provider_score.has_value());

    CHECK(fetch_local(lex, "unknown", 5).empty());
    CHECK(fetch_local(lex, "sea voyage", 50).size() == 9);

    LocalProvider provider(lex);
    auto via_provider = provider.suggest("storm", 3);
    REQUIRE(via_provider.size() == 3);
    CHECK(via_provider[0].term == top3[0].term);
}

TEST_CASE("lexicon entries are normalized and deduplicated on load") {
    TempFile file(R"({"Q  x": ["A", "a", "", "  B "]})", ".json");
    LocalLexicon lex = load_lexicon(file.path());
    REQUIRE(lex.entries.count("q x") == 1);
    CHECK(lex.entries.at("q x") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("lexicon load failures carry the io exit code") {
    auto expect_io_error = [](const std::string& path) {
        try {
            load_lexicon(path);
            FAIL("expected Error for " + path);
        } catch (const Error& e) {
            CHECK(e.code() == ExitCode::io_error);
        }
    };

    expect_io_error("/nonexistent/lexicon.json");

    TempFile not_json("this is not json", ".json");
    expect_io_error(not_json.path());

    TempFile not_object(R"(["a", "b"])", ".json");
    expect_io_error(not_object.path());

    TempFile bad_entry(R"({"q": "not an array"})", ".json");
    expect_io_error(bad_entry.path());

    TempFile bad_term(R"({"q": ["ok", 42]})", ".json");
    expect_io_error(bad_term.path());
}

TEST_CASE("parses a Datamuse response body") {
    std::string body = testutil::read_file(testutil::fixture_path("datamuse_sample.json"));
    auto out = parse_datamuse_response(body, 50, "prosecution");

    REQUIRE(out.size() == 10);
    CHECK(out[0].term == "pursuance");
    CHECK(out[0].provider_rank == 0);
    CHECK(out[0].provider_score == 52712.0);
    CHECK(out[1].term == "prosecutors");
    CHECK(out[2].term == "prosecutor");  // "Prosecutor" lowercased
    CHECK(out[2].provider_rank == 2);

    // the duplicate "prosecutors" row leaves a rank gap
    CHECK(out[8].term == "indictment");
    CHECK(out[8].provider_rank == 9);
    CHECK_FALSE(out[8].provider_score.has_value());
    CHECK(out[9].term == "conviction");
    CHECK(out[9].provider_rank == 10);

    auto capped = parse_datamuse_response(body, 5, "prosecution");
    REQUIRE(capped.size() == 5);
    CHECK(capped.back().term == "retrial");
}

TEST_CASE("rejects malformed Datamuse bodies") {
    auto expect_provider_error = [](std::string_view body) {
        try {
            parse_datamuse_response(body, 10, "q");
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK(e.code() == ExitCode::provider_error);
            CHECK(e.query() == "q");
        }
    };
    expect_provider_error("not json at all");
    expect_provider_error(R"({"word": "object-not-array"})");
    expect_provider_error(R"([{"score": 42}])");
    expect_provider_error(R"([{"word": 42}])");
    expect_provider_error(R"(["bare string"])");

    CHECK(parse_datamuse_response("[]", 10, "q").empty());
}

TEST_CASE("url_encode percent-encodes everything outside the unreserved set") {
    CHECK(detail::url_encode("plain-word_0.9~x") == "plain-word_0.9~x");
    CHECK(detail::url_encode("sea voyage") == "sea%20voyage");
    CHECK(detail::url_encode("a&b=c") == "a%26b%3Dc");
    CHECK(detail::url_encode("caf\xC3\xA9") == "caf%C3%A9");
}

namespace {

/// Serves /words on a loopback port for client tests.
class MockDatamuse {
public:
    explicit MockDatamuse(httplib::Server::Handler handler) {
        server_.Get("/words", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockDatamuse() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

DatamuseConfig test_config(const std::string& base_url, std::size_t max_retries = 3,
                           std::size_t max_in_flight = 4) {
    DatamuseConfig config;
    config.base_url = base_url;
    config.max_retries = max_retries;
    config.backoff = std::chrono::milliseconds(1);
    config.max_in_flight = max_in_flight;
    config.timeout = std::chrono::seconds(5);
    return config;
}

}  // namespace

TEST_CASE("datamuse client sends normalized query params and parses the reply") {
    std::string seen_ml;
    std::string seen_max;
    MockDatamuse mock([&](const httplib::Request& req, httplib::Response& res) {
        seen_ml = req.get_param_value("ml");
        seen_max = req.get_param_value("max");
        res.set_content(R"([{"word": "Sail", "score": 100}, {"word": "harbor"}])",
                        "application/json");
    });

    DatamuseClient client(test_config(mock.base_url()));
    auto out = client.fetch("  Sea   Voyage ", 7);

    CHECK(seen_ml == "sea voyage");
    CHECK(seen_max == "7");
    REQUIRE(out.size() == 2);
    CHECK(out[0].term == "sail");
    CHECK(out[0].provider_score == 100.0);
    CHECK(out[1].term == "harbor");
}

TEST_CASE("datamuse client retries transient failures") {
    std::atomic<int> calls{0};
    MockDatamuse mock([&](const httplib::Request&, httplib::Response& res) {
        if (calls.fetch_add(1) == 0) {
            res.status = 500;
        } else {
            res.set_content(R"([{"word": "ok", "score": 1}])", "application/json");
        }
    });

    DatamuseClient client(test_config(mock.base_url()));
    auto out = client.fetch("storm", 5);
    REQUIRE(out.size() == 1);
    CHECK(out[0].term == "ok");
    CHECK(calls.load() == 2);
}

TEST_CASE("datamuse client gives up after exhausting retries") {
    std::atomic<int> calls{0};
    MockDatamuse mock([&](const httplib::Request&, httplib::Response& res) {
        calls.fetch_add(1);
        res.status = 503;
    });

    DatamuseClient client(test_config(mock.base_url(), 2));
    CHECK_THROWS_AS(client.fetch("storm", 5), ProviderError);
    CHECK(calls.load() == 3);
}

TEST_CASE("datamuse client does not retry non-transient statuses") {
    std::atomic<int> calls{0};
    MockDatamuse mock([&](const httplib::Request&, httplib::Response& res) {
        calls.fetch_add(1);
        res.status = 404;
    });

    DatamuseClient client(test_config(mock.base_url()));
    CHECK_THROWS_AS(client.fetch("storm", 5), ProviderError);
    CHECK(calls.load() == 1);
}

TEST_CASE("datamuse client rejects malformed bodies without retrying") {
    std::atomic<int> calls{0};
    MockDatamuse mock([&](const httplib::Request&, httplib::Response& res) {
        calls.fetch_add(1);
        res.set_content("definitely not json", "text/plain");
    });

    DatamuseClient client(test_config(mock.base_url()));
    CHECK_THROWS_AS(client.fetch("storm", 5), ProviderError);
    CHECK(calls.load() == 1);
}

TEST_CASE("datamuse client caps concurrent requests") {
    std::atomic<int> current{0};
    std::atomic<int> high_water{0};
    MockDatamuse mock([&](const httplib::Request&, httplib::Response& res) {
        int cur = current.fetch_add(1) + 1;
        int seen = high_water.load();
        while (seen < cur && !high_water.compare_exchange_weak(seen, cur)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        current.fetch_sub(1);
        res.set_content(R"([{"word": "ok"}])", "application/json");
    });

    DatamuseClient client(test_config(mock.base_url(), 0, 2));
    std::vector<std::thread> workers;
    std::atomic<int> successes{0};
    for (int i = 0; i < 6; ++i) {
        workers.emplace_back([&] {
            auto out = client.fetch("storm", 5);
            if (out.size() == 1) successes.fetch_add(1);
        });
    }
    for (auto& w : workers) w.join();

    CHECK(successes.load() == 6);
    CHECK(high_water.load() <= 2);
}
