"""Local chat-completion server with scripted replies, for tests and demos.

Speaks just enough of the OpenAI-compatible wire protocol for the
gateway: POST {base}/chat/completions. Replies are chosen by substring
match of scripted patterns against the last user message; with no
match, the reply is the fixed fallback prefix plus that message, which
keeps every exchange deterministic. ``fail_times`` makes the next N
requests return 500 so retry behavior can be exercised.

Run standalone with: python -m studycompanion.mockserver [--port N]
"""

from __future__ import annotations

import argparse
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

FALLBACK_PREFIX = "[mock reply] "


class MockLLMServer:
    def __init__(
        self,
        scripted: list[tuple[str, str]] | None = None,
        fail_times: int = 0,
        host: str = "127.0.0.1",
        port: int = 0,
    ) -> None:
        self.scripted = list(scripted or [])
        self.host = host
        self._requested_port = port
        self.requests: list[dict] = []
        self._fail_remaining = fail_times
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        if self._server is None:
            raise RuntimeError("server not started")
        return self._server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}/v1"

    def fail_times(self, count: int) -> None:
        with self._lock:
            self._fail_remaining = count

    def reply_for(self, last_user: str) -> str:
        lowered = last_user.casefold()
        for pattern, reply in self.scripted:
            if pattern.casefold() in lowered:
                return reply
        return FALLBACK_PREFIX + last_user

    def start(self) -> "MockLLMServer":
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:
                pass

            def _send_json(self, status: int, doc: dict) -> None:
                payload = json.dumps(doc).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def do_POST(self) -> None:
                if not self.path.endswith("/chat/completions"):
                    self._send_json(404, {"error": {"message": "unknown path"}})
                    return
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    body = json.loads(self.rfile.read(length) or b"{}")
                except ValueError:
                    self._send_json(400, {"error": {"message": "bad JSON"}})
                    return
                with outer._lock:
                    outer.requests.append(
                        {
                            "path": self.path,
                            "authorization": self.headers.get("Authorization"),
                            "body": body,
                        }
                    )
                    if outer._fail_remaining > 0:
                        outer._fail_remaining -= 1
                        self._send_json(500, {"error": {"message": "injected failure"}})
                        return
                users = [m for m in body.get("messages", []) if m.get("role") == "user"]
                last_user = users[-1]["content"] if users else ""
                self._send_json(
                    200,
                    {
                        "id": "mock-completion",
                        "object": "chat.completion",
                        "model": body.get("model", "mock"),
                        "choices": [
                            {
                                "index": 0,
                                "message": {
                                    "role": "assistant",
                                    "content": outer.reply_for(last_user),
                                },
                                "finish_reason": "stop",
                            }
                        ],
                    },
                )

        self._server = ThreadingHTTPServer((self.host, self._requested_port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "MockLLMServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Run the scripted mock LLM server.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    args = parser.parse_args(argv)
    server = MockLLMServer(host=args.host, port=args.port).start()
    print(f"mock LLM server listening on {server.base_url}")
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
