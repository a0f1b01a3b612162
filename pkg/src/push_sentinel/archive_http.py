"""Tiny read-only HTTP front for a local archive directory.

Web clients browse archived blurred keyframes with plain GETs against the
store layout ({stream_id}/roi_000001.png|.json). A JSON listing is served
at /{stream_id}/index.json so galleries need no directory scraping.
"""

from __future__ import annotations

import json
import threading
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer

from push_sentinel.annotator import LocalDirectoryStore

__all__ = ["serve_archive"]


def serve_archive(store: LocalDirectoryStore,
                  listen_addr: tuple[str, int]) -> tuple[str, int]:
    """Serve the store's directory tree; returns the bound address."""
    root = store.root

    class Handler(SimpleHTTPRequestHandler):
        def __init__(self, *args, **kwargs):
            super().__init__(*args, directory=str(root), **kwargs)

        def do_GET(self):
            if self.path.endswith("/index.json"):
                stream = self.path.strip("/").rsplit("/", 1)[0]
                safe = stream and "/" not in stream and ".." not in stream
                listing = sorted(p.name for p in (root / stream).glob("roi_*.json")) \
                    if safe and (root / stream).is_dir() else []
                body = json.dumps({"stream_id": stream, "records": listing}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
            super().do_GET()

        def end_headers(self):
            self.send_header("Access-Control-Allow-Origin", "*")
            super().end_headers()

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(listen_addr, Handler)
    threading.Thread(target=server.serve_forever, name="archive-http",
                     daemon=True).start()
    return server.server_address
