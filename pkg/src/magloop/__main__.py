from magloop.cli import main

raise SystemExit(main())
