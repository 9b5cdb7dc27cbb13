#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include "rescov/http_service.hpp"
#include "test_support.hpp"

namespace rescov {
namespace {

class HttpApi : public ::testing::Test {
 protected:
  void SetUp() override {
    ScenarioConfig defaults;
    defaults.pool_size = 20;
    defaults.bounds = {{0, 0}, {16, 16}};
    mount_routes(server_, sessions_, defaults);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
  }

  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  nlohmann::json post(const std::string& path, const nlohmann::json& body, int expect) {
    auto r = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r);
    if (!r) return nullptr;
    EXPECT_EQ(r->status, expect) << r->body;
    return nlohmann::json::parse(r->body);
  }

  nlohmann::json get(const std::string& path, int expect) {
    auto r = client_->Get(path);
    EXPECT_TRUE(r);
    if (!r) return nullptr;
    EXPECT_EQ(r->status, expect) << r->body;
    return nlohmann::json::parse(r->body);
  }

  std::string create(const nlohmann::json& body = nlohmann::json::object()) {
    return post("/sessions", body, 201).at("session_id");
  }

  static std::vector<nlohmann::json> frames(const std::string& body) {
    std::vector<nlohmann::json> out;
    std::size_t pos = 0;
    while (pos < body.size()) {
      std::size_t end = body.find("\n\n", pos);
      EXPECT_NE(end, std::string::npos);
      if (end == std::string::npos) break;
      std::string frame = body.substr(pos, end - pos);
      EXPECT_EQ(frame.rfind("data: ", 0), 0u) << frame;
      out.push_back(nlohmann::json::parse(frame.substr(6)));
      pos = end + 2;
    }
    return out;
  }

  httplib::Server server_;
  SessionManager sessions_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpApi, CreateAndState) {
  auto created = post("/sessions", {{"seed", 3}}, 201);
  std::string id = created.at("session_id");
  EXPECT_EQ(created.at("state").at("state"), "idle");
  auto st = get("/sessions/" + id + "/state", 200);
  EXPECT_EQ(st.at("failures"), 0);
  EXPECT_EQ(st.at("grid").at("nx"), 16);
  auto err = get("/sessions/missing/state", 404);
  EXPECT_EQ(err.at("error"), "NotFound");
}

TEST_F(HttpApi, BadConfigAndInfeasibleSelection) {
  EXPECT_EQ(post("/sessions", {{"alpha", 2.0}}, 400).at("error"), "InvalidArgument");
  EXPECT_EQ(post("/sessions", {{"beta", 1.0}}, 422).at("error"), "SelectionInfeasible");
  auto r = client_->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST_F(HttpApi, FailurePreviewCommitFinish) {
  std::string id = create();
  std::string base = "/sessions/" + id;
  EXPECT_EQ(get(base + "/preview?L=5&gamma=1", 409).at("error"), "NoPendingFailure");
  EXPECT_EQ(post(base + "/commit", {{"L", 5}, {"gamma", 1}}, 409).at("error"), "NoPendingFailure");
  EXPECT_EQ(post(base + "/failure", nlohmann::json::object(), 400).at("error"), "InvalidArgument");

  auto st = get(base + "/state", 200);
  RobotId victim = st.at("robots")[0].at("id");
  auto inj = post(base + "/failure", {{"robot_id", victim}, {"time", 90.0}}, 200);
  EXPECT_EQ(inj.at("failure").at("robot_id"), victim);
  EXPECT_EQ(inj.at("state"), "awaiting_operator");
  EXPECT_EQ(post(base + "/failure", {{"sample", true}}, 409).at("error"), "Conflict");
  EXPECT_EQ(post(base + "/finish", nlohmann::json::object(), 409).at("error"), "Conflict");

  get(base + "/preview?L=5", 400);
  auto preview = get(base + "/preview?L=5&gamma=1", 200);
  EXPECT_EQ(preview.at("failed_id"), victim);
  EXPECT_EQ(get(base + "/preview?L=5&gamma=1", 200), preview);
  auto committed = post(base + "/commit", {{"L", 5}, {"gamma", 1}}, 200);
  EXPECT_EQ(committed.at("result"), preview.at("result"));
  EXPECT_EQ(committed.at("state"), "running");

  post(base + "/failure", {{"sample", true}}, 200);
  post(base + "/commit", {{"L", 3}, {"gamma", 0}}, 200);
  EXPECT_EQ(post(base + "/finish", nlohmann::json::object(), 200).at("state"), "finished");
  EXPECT_EQ(post(base + "/finish", nlohmann::json::object(), 409).at("error"), "Conflict");
  EXPECT_EQ(get(base + "/state", 200).at("failures"), 2);
}

TEST_F(HttpApi, EventStreamFraming) {
  std::string id = create();
  std::string base = "/sessions/" + id;
  post(base + "/failure", {{"sample", true}, {"time", 40.0}}, 200);
  auto r = client_->Get(base + "/events");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_NE(r->get_header_value("Content-Type").find("text/event-stream"), std::string::npos);
  auto all = frames(r->body);
  ASSERT_FALSE(all.empty());
  for (std::size_t k = 0; k < all.size(); ++k) EXPECT_EQ(all[k].at("seq"), k);
  EXPECT_TRUE(std::any_of(all.begin(), all.end(), [](const auto& f) { return f.at("type") == "FailureInjected"; }));

  auto tail = frames(client_->Get(base + "/events?from=1")->body);
  EXPECT_EQ(tail.size(), all.size() - 1);
  EXPECT_EQ(get("/sessions/zzz/events", 404).at("error"), "NotFound");
}

TEST_F(HttpApi, FollowStreamEndsWhenSessionFinishes) {
  std::string id = create();
  std::string base = "/sessions/" + id;
  std::size_t start = get(base + "/state", 200).at("event_count");
  std::string streamed;
  std::thread follower([&] {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    auto r = c.Get(base + "/events?follow=1&from=" + std::to_string(start),
                   [&](const char* data, std::size_t len) {
                     streamed.append(data, len);
                     return true;
                   });
    EXPECT_TRUE(r);
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  post(base + "/failure", {{"sample", true}, {"time", 70.0}}, 200);
  post(base + "/commit", {{"L", 4}, {"gamma", 1}}, 200);
  post(base + "/finish", nlohmann::json::object(), 200);
  follower.join();
  auto got = frames(streamed);
  ASSERT_FALSE(got.empty());
  EXPECT_EQ(got.front().at("seq"), start);
  EXPECT_EQ(got.front().at("type"), "FailureInjected");
  EXPECT_EQ(got.back().at("type"), "CoverageSample");
  EXPECT_TRUE(got.back().at("payload").at("final").get<bool>());
}

}  // namespace
}  // namespace rescov
